#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calendar.hpp"
#include "grouping.hpp"
#include "model.hpp"
#include "story_json.hpp"
#include "text.hpp"

namespace storyline {

inline constexpr std::array<double, 9> kSplitRatios = {0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};

struct LayoutConfig {
    double width = 1600.0;
    double lane_height = 50.0;         // fits a one-line box with its marker
    double padding = 8.0;             // minimum horizontal gap between boxes in a lane
    double char_width = 8.0;          // title characters (bold)
    double note_char_width = 6.0;     // note characters
    double min_segment_width = 60.0;
    double max_box_width = 220.0;
    double box_inset = 6.0;           // text inset inside a box
    double title_line_height = 16.0;
    double note_line_height = 14.0;
    double badge_width = 24.0;        // designation badge column before title text
    double marker_band = 16.0;        // space below a box for its marker
    double lane_gap = 6.0;            // space above a box inside its lane
    double header_band = 28.0;        // segment labels
    double axis_band = 44.0;          // absolute and age axis labels
    double scale_inset = 12.0;        // keeps timescale ends off segment borders

    double chrome() const { return header_band + axis_band; }
};

// ---------------------------------------------------------------------------
// Geometry types
// ---------------------------------------------------------------------------

enum class SegmentKind { NoTime, Past, Timescale, Present };

inline constexpr std::string_view to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::NoTime: return "noTime";
        case SegmentKind::Past: return "past";
        case SegmentKind::Timescale: return "timescale";
        case SegmentKind::Present: return "present";
    }
    return "";
}

/// Linear map from calendar days onto [x0, x1].
struct LinearScale {
    CalendarDate from;
    CalendarDate to;
    double x0 = 0;
    double x1 = 0;

    double operator()(const CalendarDate& d) const {
        const long a = to_day_number(from);
        const long b = to_day_number(to);
        if (a == b) return (x0 + x1) / 2.0;
        return x0 + (x1 - x0) * static_cast<double>(to_day_number(d) - a) / static_cast<double>(b - a);
    }

    bool operator==(const LinearScale&) const = default;
};

struct Segment {
    SegmentKind kind = SegmentKind::NoTime;
    double left = 0;
    double right = 0;
    std::size_t count = 0;                // time references placed in this segment
    std::optional<std::size_t> cluster;   // index into TimeGroups::clusters
    std::optional<LinearScale> scale;

    double width() const { return right - left; }
    double mid() const { return (left + right) / 2.0; }
    bool operator==(const Segment&) const = default;
};

enum class MarkerKind { Circle, Line };

struct Marker {
    MarkerKind kind = MarkerKind::Circle;
    double x1 = 0;  // circle centre, or line start
    double x2 = 0;  // equals x1 for a circle
    double y = 0;

    bool operator==(const Marker&) const = default;
};

struct InfoBoxGeometry {
    std::string event_id;
    double left = 0;
    double right = 0;
    double top = 0;
    double bottom = 0;
    Marker marker;
    std::vector<std::size_t> spans;  // segment indices covered by the marker
    std::vector<std::string> title_lines;
    std::vector<std::string> note_lines;

    double width() const { return right - left; }
    double height() const { return bottom - top; }
    bool operator==(const InfoBoxGeometry&) const = default;
};

struct Lane {
    double top = 0;
    double height = 0;
    std::vector<InfoBoxGeometry> boxes;

    bool operator==(const Lane&) const = default;
};

enum class TrackKind { Broad, Standalone, Other, Life };

inline constexpr std::string_view to_string(TrackKind k) {
    switch (k) {
        case TrackKind::Broad: return "broad";
        case TrackKind::Standalone: return "standalone";
        case TrackKind::Other: return "other";
        case TrackKind::Life: return "life";
    }
    return "";
}

struct TrackGeometry {
    std::string label;                       // specific concern
    std::optional<std::string> broad_label;  // set for tracks nested in a broad group
    TrackKind kind = TrackKind::Standalone;
    double top = 0;
    double bottom = 0;
    std::vector<Lane> lanes;

    double height() const { return bottom - top; }
    bool operator==(const TrackGeometry&) const = default;
};

struct LayoutGeometry {
    double width = 0;
    double chrome = 0;
    double split_ratio = kSplitRatios.front();
    std::vector<Segment> segments;
    std::vector<TrackGeometry> tracks;
    double total_height = 0;

    const InfoBoxGeometry* find_box(std::string_view id) const {
        for (const auto& t : tracks)
            for (const auto& l : t.lanes)
                for (const auto& b : l.boxes)
                    if (b.event_id == id) return &b;
        return nullptr;
    }

    bool operator==(const LayoutGeometry&) const = default;
};

// ---------------------------------------------------------------------------
// Segment widths
// ---------------------------------------------------------------------------

/// Width per temporal segment: proportional to its count with a floor of
/// `min_width`, renormalized to W(1 - r). Segments with count 0 get width 0.
inline std::vector<double> allocate_segment_widths(const std::vector<std::size_t>& counts, double width, double r,
                                                   double min_width) {
    std::vector<double> widths(counts.size(), 0.0);
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) return widths;
    const double available = width * (1.0 - r);
    double sum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        widths[i] = std::max(min_width, static_cast<double>(counts[i]) / static_cast<double>(total) * available);
        sum += widths[i];
    }
    for (double& w : widths) w = w * available / sum;
    return widths;
}

// ---------------------------------------------------------------------------
// Lane packing
// ---------------------------------------------------------------------------

struct PackItem {
    double left = 0;
    double right = 0;
    std::size_t order = 0;  // tie-break, normally the narrative index
};

/// First-fit: items in (left, order) order, each into the lowest lane whose
/// boxes all end at least `padding` before it starts. Returns a lane per item.
inline std::vector<std::size_t> pack_track(const std::vector<PackItem>& items, double padding) {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (items[a].left != items[b].left) return items[a].left < items[b].left;
        return items[a].order < items[b].order;
    });

    std::vector<std::size_t> lane_of(items.size(), 0);
    std::vector<double> lane_right;  // rightmost extent per lane
    for (std::size_t i : order) {
        std::size_t lane = 0;
        while (lane < lane_right.size() && items[i].left < lane_right[lane] + padding) ++lane;
        if (lane == lane_right.size()) lane_right.push_back(items[i].right);
        else lane_right[lane] = std::max(lane_right[lane], items[i].right);
        lane_of[i] = lane;
    }
    return lane_of;
}

// ---------------------------------------------------------------------------
// Box sizing
// ---------------------------------------------------------------------------

struct BoxSize {
    double width = 0;
    double height = 0;
    std::vector<std::string> title_lines;
    std::vector<std::string> note_lines;
};

/// Deterministic text-extent estimate: wraps title and notes to the maximum
/// box width and sizes the box to the longest line. Title lines sit to the
/// right of the designation badge.
inline BoxSize measure_box(const Event& e, const LayoutConfig& config) {
    BoxSize size;
    const double text_width = config.max_box_width - 2 * config.box_inset;
    const auto title_chars = static_cast<std::size_t>(
        std::max(1.0, std::floor((text_width - config.badge_width) / config.char_width)));
    const auto note_chars = static_cast<std::size_t>(std::max(1.0, std::floor(text_width / config.note_char_width)));
    size.title_lines = text::wrap(e.title, title_chars);
    size.note_lines = text::wrap(e.notes, note_chars);
    if (size.title_lines.empty()) size.title_lines.emplace_back();

    double widest = 0;
    for (const auto& l : size.title_lines)
        widest = std::max(widest,
                          config.badge_width + static_cast<double>(text::display_length(l)) * config.char_width);
    for (const auto& l : size.note_lines)
        widest = std::max(widest, static_cast<double>(text::display_length(l)) * config.note_char_width);
    size.width = widest + 2 * config.box_inset;
    size.height = 2 * config.box_inset + static_cast<double>(size.title_lines.size()) * config.title_line_height +
                  static_cast<double>(size.note_lines.size()) * config.note_line_height;
    return size;
}

// ---------------------------------------------------------------------------
// Draft layout
// ---------------------------------------------------------------------------

namespace layout_detail {

/// Date without a calendar day cannot be placed and counts as unspecified.
inline TimeKind placed_kind(const TimeValue& v) {
    if (v.is_date() && !v.calendar_date()) return TimeKind::Unspecified;
    return v.kind();
}

struct TrackSpec {
    const SpecificGroup* group;
    std::optional<std::string> broad;
    TrackKind kind;
};

inline std::vector<TrackSpec> track_order(const ConcernGroups& c) {
    std::vector<TrackSpec> out;
    for (const auto& b : c.broad_groups)
        for (const auto& s : b.specifics) out.push_back({&s, b.name, TrackKind::Broad});
    for (const auto& s : c.standalone) out.push_back({&s, std::nullopt, TrackKind::Standalone});
    if (c.other) out.push_back({&*c.other, std::nullopt, TrackKind::Other});
    if (c.life) out.push_back({&*c.life, std::nullopt, TrackKind::Life});
    return out;
}

struct SegmentPlan {
    std::vector<Segment> segments;
    std::optional<std::size_t> no_time;
    std::optional<std::size_t> past;
    std::optional<std::size_t> present;
    std::vector<std::optional<std::size_t>> cluster_segment;  // by cluster index
};

inline SegmentPlan plan_segments(const std::vector<const Event*>& events, const TimeGroups& times,
                                 const LayoutConfig& config, double r) {
    const double W = config.width;
    SegmentPlan plan;
    bool undated = false;
    for (const Event* e : events)
        if (placed_kind(e->start) == TimeKind::Unspecified && placed_kind(e->end) == TimeKind::Unspecified)
            undated = true;

    std::vector<std::size_t> counts;
    counts.push_back(times.early.size());
    for (const auto& c : times.clusters) counts.push_back(c.values.size());
    counts.push_back(times.current.size());
    const auto widths = allocate_segment_widths(counts, W, r, config.min_segment_width);
    const bool temporal = std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });

    if (undated) {
        plan.no_time = plan.segments.size();
        plan.segments.push_back({SegmentKind::NoTime, 0.0, temporal ? W * r : W, 0, std::nullopt, std::nullopt});
    }
    if (!temporal) return plan;

    double x = W * r;
    auto add = [&](SegmentKind kind, std::size_t k) -> std::optional<std::size_t> {
        if (counts[k] == 0) return std::nullopt;
        plan.segments.push_back({kind, x, x + widths[k], counts[k], std::nullopt, std::nullopt});
        x += widths[k];
        return plan.segments.size() - 1;
    };
    plan.past = add(SegmentKind::Past, 0);
    plan.cluster_segment.resize(times.clusters.size());
    for (std::size_t c = 0; c < times.clusters.size(); ++c) {
        auto idx = add(SegmentKind::Timescale, c + 1);
        plan.cluster_segment[c] = idx;
        if (!idx) continue;
        Segment& s = plan.segments[*idx];
        s.cluster = c;
        const double inset = std::min(config.scale_inset, s.width() / 4.0);
        s.scale = LinearScale{times.clusters[c].min_date, times.clusters[c].max_date, s.left + inset, s.right - inset};
    }
    plan.present = add(SegmentKind::Present, counts.size() - 1);
    // Absorb floating-point drift so the last segment ends exactly at W.
    plan.segments.back().right = W;
    return plan;
}

inline std::size_t segment_at(const std::vector<Segment>& segments, double x) {
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (x < segments[i].right) return i;
    return segments.empty() ? 0 : segments.size() - 1;
}

}  // namespace layout_detail

/// Lays out one candidate split ratio `r`; the result's total_height is the
/// quantity minimized over r.
inline LayoutGeometry draft_layout(const std::vector<Event>& events, const GroupedStory& groups,
                                   const LayoutConfig& config, double r) {
    using namespace layout_detail;
    LayoutGeometry geo;
    geo.width = config.width;
    geo.chrome = config.chrome();
    geo.split_ratio = r;

    const auto ordered = grouping_detail::narrative_order(events);
    SegmentPlan plan = plan_segments(ordered, groups.times, config, r);
    geo.segments = plan.segments;

    // Even-spacing slots for segments without a scale, in narrative order.
    std::map<std::string, std::size_t> slot_of;
    std::array<std::size_t, 3> slot_count{};  // NoTime, Past, Present
    auto slot_segment = [&](const Event& e) -> int {
        const TimeKind s = placed_kind(e.start), t = placed_kind(e.end);
        if (s == TimeKind::Unspecified && t == TimeKind::Unspecified) return 0;
        if (s == TimeKind::Early || (s == TimeKind::Unspecified && t == TimeKind::Early)) return 1;
        if ((s == TimeKind::Current || s == TimeKind::Unspecified) && t != TimeKind::Date &&
            (s == TimeKind::Current || t == TimeKind::Current))
            return 2;
        return -1;
    };
    for (const Event* e : ordered) {
        const int k = slot_segment(*e);
        if (k >= 0) slot_of[e->id] = slot_count[static_cast<std::size_t>(k)]++;
    }
    auto slot_x = [&](const std::optional<std::size_t>& seg, int k, const Event& e) {
        const Segment& s = geo.segments[*seg];
        const double n = static_cast<double>(slot_count[static_cast<std::size_t>(k)]);
        return s.left + (static_cast<double>(slot_of.at(e.id)) + 0.5) * s.width() / n;
    };
    auto date_x = [&](const Event& e, EventEnd which) {
        const auto& clusters = groups.times.clusters;
        for (std::size_t c = 0; c < clusters.size(); ++c)
            for (const auto& v : clusters[c].values)
                if (v.event_id == e.id && v.which == which)
                    return (*geo.segments[*plan.cluster_segment[c]].scale)(v.date);
        return 0.0;
    };
    // Position of one end; `own_slot` says whether this event holds a slot in
    // the end's segment (else the segment midpoint is used).
    auto end_x = [&](const Event& e, EventEnd which) {
        const TimeKind k = placed_kind(e.time(which));
        const int slot = slot_segment(e);
        switch (k) {
            case TimeKind::Date: return date_x(e, which);
            case TimeKind::Early: return slot == 1 ? slot_x(plan.past, 1, e) : geo.segments[*plan.past].mid();
            case TimeKind::Current:
                return slot == 2 ? slot_x(plan.present, 2, e) : geo.segments[*plan.present].mid();
            case TimeKind::Unspecified: break;
        }
        return slot_x(plan.no_time, 0, e);
    };

    geo.total_height = geo.chrome;
    double y = geo.chrome;
    for (const TrackSpec& spec : track_order(groups.concerns)) {
        TrackGeometry track;
        track.label = spec.group->name;
        track.broad_label = spec.broad;
        track.kind = spec.kind;
        track.top = y;

        std::vector<InfoBoxGeometry> boxes;
        std::vector<PackItem> items;
        for (const std::string& id : spec.group->event_ids) {
            const Event& e = **std::find_if(ordered.begin(), ordered.end(), [&](const Event* p) { return p->id == id; });
            InfoBoxGeometry box;
            box.event_id = e.id;

            const TimeKind s = placed_kind(e.start), t = placed_kind(e.end);
            const bool point = s == TimeKind::Unspecified || t == TimeKind::Unspecified ||
                               (s == t && s != TimeKind::Date) ||
                               (s == TimeKind::Date && t == TimeKind::Date &&
                                *e.start.calendar_date() == *e.end.calendar_date());
            if (point) {
                const EventEnd defining = s == TimeKind::Unspecified ? EventEnd::End : EventEnd::Start;
                const double x = end_x(e, defining);
                box.marker = {MarkerKind::Circle, x, x, 0};
            } else {
                double x1 = end_x(e, EventEnd::Start), x2 = end_x(e, EventEnd::End);
                if (x2 < x1) std::swap(x1, x2);
                box.marker = {MarkerKind::Line, x1, x2, 0};
            }
            const std::size_t first = segment_at(geo.segments, box.marker.x1);
            const std::size_t last = segment_at(geo.segments, box.marker.x2);
            for (std::size_t k = first; k <= last && k < geo.segments.size(); ++k) box.spans.push_back(k);

            BoxSize size = measure_box(e, config);
            const double cx = (box.marker.x1 + box.marker.x2) / 2.0;
            box.left = std::clamp(cx - size.width / 2.0, 0.0, std::max(0.0, config.width - size.width));
            box.right = box.left + size.width;
            box.top = 0;
            box.bottom = size.height;
            box.title_lines = std::move(size.title_lines);
            box.note_lines = std::move(size.note_lines);

            items.push_back({std::min(box.left, box.marker.x1), std::max(box.right, box.marker.x2), e.narrative_index});
            boxes.push_back(std::move(box));
        }

        const auto lane_of = pack_track(items, config.padding);
        std::size_t lanes = 0;
        for (auto l : lane_of) lanes = std::max(lanes, l + 1);
        track.lanes.resize(lanes);
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            Lane& lane = track.lanes[lane_of[i]];
            lane.height = std::max({lane.height, config.lane_height,
                                    config.marker_band + boxes[i].height() + config.lane_gap});
            lane.boxes.push_back(std::move(boxes[i]));
        }
        for (Lane& lane : track.lanes) {
            lane.top = y;
            for (InfoBoxGeometry& b : lane.boxes) {
                const double h = b.height();
                b.top = y + config.lane_gap;
                b.bottom = b.top + h;
                b.marker.y = b.bottom + config.marker_band / 2.0;
            }
            std::stable_sort(lane.boxes.begin(), lane.boxes.end(),
                             [](const InfoBoxGeometry& a, const InfoBoxGeometry& b) { return a.left < b.left; });
            y += lane.height;
        }
        track.bottom = y;
        geo.tracks.push_back(std::move(track));
    }
    geo.total_height = y;
    return geo;
}

/// Evaluates every split ratio and keeps the lowest layout; ties keep the
/// smaller ratio.
inline LayoutGeometry timeline_layout(const std::vector<Event>& events, const GroupedStory& groups,
                                      const LayoutConfig& config = {}) {
    LayoutGeometry best;
    double best_height = std::numeric_limits<double>::infinity();
    for (double r : kSplitRatios) {
        LayoutGeometry g = draft_layout(events, groups, config, r);
        if (g.total_height < best_height) {
            best_height = g.total_height;
            best = std::move(g);
        }
    }
    return best;
}

inline LayoutGeometry timeline_layout(const HealthStory& story, const LayoutConfig& config = {}) {
    return timeline_layout(story.events, group_story(story.events), config);
}

/// The same grouping with every temporal cluster merged into one.
inline GroupedStory single_timescale_groups(GroupedStory groups) {
    auto& clusters = groups.times.clusters;
    if (clusters.size() > 1) {
        TemporalCluster all{clusters.front().min_date, clusters.back().max_date, {}};
        for (auto& c : clusters)
            for (auto& v : c.values) all.values.push_back(std::move(v));
        clusters.assign(1, std::move(all));
    }
    return groups;
}

/// Baseline with one timescale spanning every dated value.
inline LayoutGeometry single_timescale_layout(const std::vector<Event>& events, const GroupedStory& groups,
                                              const LayoutConfig& config = {}) {
    return timeline_layout(events, single_timescale_groups(groups), config);
}

inline LayoutGeometry single_timescale_layout(const HealthStory& story, const LayoutConfig& config = {}) {
    return single_timescale_layout(story.events, group_story(story.events), config);
}

// ---------------------------------------------------------------------------
// Geometry export
// ---------------------------------------------------------------------------

namespace layout_detail {

inline double round2(double v) {
    const double r = std::round(v * 100.0) / 100.0;
    return r == 0.0 ? 0.0 : r;  // no "-0"
}

}  // namespace layout_detail

inline Json to_json(const LayoutGeometry& g) {
    using layout_detail::round2;
    Json j;
    j["width"] = round2(g.width);
    j["totalHeight"] = round2(g.total_height);
    j["chrome"] = round2(g.chrome);
    j["splitRatio"] = round2(g.split_ratio);
    j["segments"] = Json::array();
    for (const Segment& s : g.segments) {
        Json js;
        js["kind"] = to_string(s.kind);
        js["left"] = round2(s.left);
        js["right"] = round2(s.right);
        js["count"] = s.count;
        if (s.scale) {
            js["scale"] = {{"from", format_iso(s.scale->from)},
                           {"to", format_iso(s.scale->to)},
                           {"x0", round2(s.scale->x0)},
                           {"x1", round2(s.scale->x1)}};
        }
        j["segments"].push_back(std::move(js));
    }
    j["tracks"] = Json::array();
    for (const TrackGeometry& t : g.tracks) {
        Json jt;
        jt["label"] = t.label;
        jt["broadLabel"] = t.broad_label ? Json(*t.broad_label) : Json(nullptr);
        jt["kind"] = to_string(t.kind);
        jt["top"] = round2(t.top);
        jt["bottom"] = round2(t.bottom);
        jt["lanes"] = Json::array();
        for (const Lane& l : t.lanes) {
            Json jl;
            jl["top"] = round2(l.top);
            jl["height"] = round2(l.height);
            jl["boxes"] = Json::array();
            for (const InfoBoxGeometry& b : l.boxes) {
                Json jb;
                jb["eventId"] = b.event_id;
                jb["left"] = round2(b.left);
                jb["right"] = round2(b.right);
                jb["top"] = round2(b.top);
                jb["bottom"] = round2(b.bottom);
                Json marker;
                marker["kind"] = b.marker.kind == MarkerKind::Circle ? "circle" : "line";
                marker["x1"] = round2(b.marker.x1);
                marker["x2"] = round2(b.marker.x2);
                marker["y"] = round2(b.marker.y);
                jb["marker"] = std::move(marker);
                jb["spans"] = b.spans;
                jb["titleLines"] = b.title_lines;
                jb["noteLines"] = b.note_lines;
                jl["boxes"].push_back(std::move(jb));
            }
            jt["lanes"].push_back(std::move(jl));
        }
        j["tracks"].push_back(std::move(jt));
    }
    return j;
}

}  // namespace storyline
