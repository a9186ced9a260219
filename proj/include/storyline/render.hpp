#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "calendar.hpp"
#include "error.hpp"
#include "layout.hpp"
#include "model.hpp"

namespace storyline {

struct DesignationStyle {
    std::string stroke;
    std::string fill;
    std::string badge;  // two-letter abbreviation
};

/// Defaults use the Okabe-Ito categorical palette.
struct StyleConfig {
    std::array<DesignationStyle, 8> palette = {{
        {"#D55E00", "#F7DFCC", "SX"},  // Symptom
        {"#0072B2", "#CCE3F0", "RX"},  // Medication
        {"#009E73", "#CCECE3", "TX"},  // Treatment
        {"#56B4E9", "#DDF0FB", "PV"},  // Provider
        {"#E69F00", "#FAECCC", "TE"},  // Test
        {"#8C7E00", "#FBF8D4", "PR"},  // Procedure
        {"#000000", "#E6E6E6", "DX"},  // Diagnosis
        {"#CC79A7", "#F5E4ED", "LE"},  // LifeEvent
    }};
    std::string life_line_color = "#7B3294";
    std::string absolute_label_color = "#000000";
    std::string age_label_color = "#1B7837";
    std::string grid_color = "#D9D9D9";
    std::string boundary_color = "#555555";
    std::string track_separator_color = "#BBBBBB";
    std::string track_label_color = "#777777";
    std::string header_color = "#333333";
    std::string background = "#FFFFFF";
    std::string font_family = "Helvetica, Arial, sans-serif";
    double title_font_size = 12.0;
    double note_font_size = 10.0;
    double badge_font_size = 9.0;
    double axis_font_size = 10.0;
    double header_font_size = 11.0;
    double track_label_font_size = 9.0;
    double marker_radius = 4.5;
    double marker_stroke_width = 3.0;

    const DesignationStyle& of(Designation d) const { return palette[static_cast<std::size_t>(d)]; }
};

// ---------------------------------------------------------------------------
// Grid ticks
// ---------------------------------------------------------------------------

enum class TickUnit { Month, Quarter, Year, Years2, Years5, Years10, Years20, Years50, Years100 };

struct Tick {
    CalendarDate date;
    double x = 0;
    TickUnit unit = TickUnit::Year;

    bool operator==(const Tick&) const = default;
};

inline constexpr std::size_t kMaxTicks = 12;

namespace render_detail {

inline constexpr std::array<TickUnit, 9> kTickUnits = {
    TickUnit::Month,   TickUnit::Quarter, TickUnit::Year,    TickUnit::Years2,   TickUnit::Years5,
    TickUnit::Years10, TickUnit::Years20, TickUnit::Years50, TickUnit::Years100,
};

inline int months_per(TickUnit u) {
    switch (u) {
        case TickUnit::Month: return 1;
        case TickUnit::Quarter: return 3;
        case TickUnit::Year: return 12;
        case TickUnit::Years2: return 24;
        case TickUnit::Years5: return 60;
        case TickUnit::Years10: return 120;
        case TickUnit::Years20: return 240;
        case TickUnit::Years50: return 600;
        case TickUnit::Years100: return 1200;
    }
    return 12;
}

}  // namespace render_detail

/// Finest unit whose nominal tick count over `span_days` is at most 12.
inline TickUnit choose_tick_unit(long span_days) {
    for (TickUnit u : render_detail::kTickUnits) {
        const double unit_days = render_detail::months_per(u) * kDaysPerYear / 12.0;
        if (static_cast<double>(span_days) / unit_days <= static_cast<double>(kMaxTicks)) return u;
    }
    return TickUnit::Years100;
}

/// Unit boundaries inside a Timescale segment, positioned by its scale. A
/// zero-span segment gets one centred tick; a span containing no boundary
/// gets one tick at its first date.
inline std::vector<Tick> compute_grid_ticks(const Segment& segment) {
    std::vector<Tick> ticks;
    if (!segment.scale) return ticks;
    const LinearScale& scale = *segment.scale;
    const long span = days_between(scale.from, scale.to);
    const TickUnit unit = choose_tick_unit(span);
    if (span == 0) {
        ticks.push_back({scale.from, scale(scale.from), unit});
        return ticks;
    }
    const int step = render_detail::months_per(unit);
    // First boundary at or after `from`: month index aligned to the step.
    const int from_month = static_cast<int>(scale.from.year()) * 12 + static_cast<int>(unsigned(scale.from.month())) - 1;
    int m = from_month;
    if (scale.from.day() != std::chrono::day{1}) ++m;
    m = ((m + step - 1) / step) * step;
    for (;; m += step) {
        const CalendarDate d = make_date(m / 12, static_cast<unsigned>(m % 12 + 1), 1);
        if (d > scale.to) break;
        ticks.push_back({d, scale(d), unit});
    }
    if (ticks.empty()) ticks.push_back({scale.from, scale(scale.from), unit});
    return ticks;
}

// ---------------------------------------------------------------------------
// SVG output
// ---------------------------------------------------------------------------

namespace render_detail {

/// XML text/attribute escaping; drops control bytes XML 1.0 cannot carry.
inline std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') break;
                out += c;
        }
    }
    return out;
}

/// Fixed two-decimal formatting with trailing zeros trimmed.
inline std::string num(double v) {
    if (std::fabs(v) < 0.005) v = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

inline constexpr std::array<const char*, 12> kMonthNames = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

inline std::string tick_label(const Tick& t) {
    const std::string year = std::to_string(static_cast<int>(t.date.year()));
    if (t.unit == TickUnit::Month || t.unit == TickUnit::Quarter || t.date.month() != std::chrono::January ||
        t.date.day() != std::chrono::day{1})
        return std::string(kMonthNames[unsigned(t.date.month()) - 1]) + " " + year;
    return year;
}

inline std::string segment_title(const Segment& s) {
    switch (s.kind) {
        case SegmentKind::NoTime: return "No Time";
        case SegmentKind::Past: return "Past";
        case SegmentKind::Present: return "Present";
        case SegmentKind::Timescale: break;
    }
    const int a = static_cast<int>(s.scale->from.year()), b = static_cast<int>(s.scale->to.year());
    return a == b ? std::to_string(a) : std::to_string(a) + "–" + std::to_string(b);
}

class SvgWriter {
public:
    void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width,
              std::string_view cls = {}) {
        out_ += "<line";
        if (!cls.empty()) attr("class", cls);
        attr("x1", num(x1));
        attr("y1", num(y1));
        attr("x2", num(x2));
        attr("y2", num(y2));
        attr("stroke", stroke);
        attr("stroke-width", num(width));
        out_ += "/>\n";
    }

    void text(double x, double y, std::string_view content, double size, std::string_view fill,
              std::string_view anchor = "start", std::string_view weight = {}, std::string_view cls = {}) {
        out_ += "<text";
        if (!cls.empty()) attr("class", cls);
        attr("x", num(x));
        attr("y", num(y));
        attr("font-size", num(size));
        attr("fill", fill);
        if (anchor != "start") attr("text-anchor", anchor);
        if (!weight.empty()) attr("font-weight", weight);
        out_ += ">";
        out_ += escape(content);
        out_ += "</text>\n";
    }

    void raw(std::string_view s) { out_ += s; }

    void attr(std::string_view name, std::string_view value) {
        out_ += ' ';
        out_ += name;
        out_ += "=\"";
        out_ += escape(value);
        out_ += '"';
    }

    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

inline std::string bubble_path(const InfoBoxGeometry& b, double tip_y) {
    constexpr double kRadius = 4.0;
    constexpr double kHalfBase = 6.0;
    const double cx = std::clamp((b.marker.x1 + b.marker.x2) / 2.0, b.left + kRadius + kHalfBase,
                                 b.right - kRadius - kHalfBase);
    const double r = std::min(kRadius, std::min(b.width(), b.height()) / 2.0);
    std::string d;
    d += "M" + num(b.left + r) + " " + num(b.top);
    d += "H" + num(b.right - r);
    d += "Q" + num(b.right) + " " + num(b.top) + " " + num(b.right) + " " + num(b.top + r);
    d += "V" + num(b.bottom - r);
    d += "Q" + num(b.right) + " " + num(b.bottom) + " " + num(b.right - r) + " " + num(b.bottom);
    d += "H" + num(cx + kHalfBase);
    d += "L" + num(cx) + " " + num(tip_y);
    d += "L" + num(cx - kHalfBase) + " " + num(b.bottom);
    d += "H" + num(b.left + r);
    d += "Q" + num(b.left) + " " + num(b.bottom) + " " + num(b.left) + " " + num(b.bottom - r);
    d += "V" + num(b.top + r);
    d += "Q" + num(b.left) + " " + num(b.top) + " " + num(b.left + r) + " " + num(b.top);
    d += "Z";
    return d;
}

}  // namespace render_detail

/// Static SVG artifact for a laid-out story. Output depends only on the
/// inputs and is byte-for-byte reproducible.
inline std::string render_svg(const LayoutGeometry& geometry, const HealthStory& story,
                              const StyleConfig& style = {}, const LayoutConfig& layout = {}) {
    using namespace render_detail;

    std::set<std::string> placed;
    for (const auto& t : geometry.tracks)
        for (const auto& l : t.lanes)
            for (const auto& b : l.boxes) {
                if (!story.find(b.event_id))
                    throw RenderConsistencyError("layout references unknown event '" + b.event_id + "'");
                if (!placed.insert(b.event_id).second)
                    throw RenderConsistencyError("layout places event '" + b.event_id + "' twice");
            }
    for (const Event& e : story.events)
        if (!placed.count(e.id)) throw RenderConsistencyError("event '" + e.id + "' has no layout");

    const double W = geometry.width;
    const double H = geometry.total_height;
    const double header = layout.header_band;
    const double chrome = geometry.chrome;

    SvgWriter svg;
    svg.raw("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.raw("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"");
    svg.attr("width", num(W));
    svg.attr("height", num(H));
    svg.attr("viewBox", "0 0 " + num(W) + " " + num(H));
    svg.attr("font-family", style.font_family);
    svg.raw(">\n");
    svg.raw("<title>");
    svg.raw(escape(story.name.empty() ? std::string("Health story") : "Health story: " + story.name));
    svg.raw("</title>\n");
    svg.raw("<rect class=\"canvas\" x=\"0\" y=\"0\"");
    svg.attr("width", num(W));
    svg.attr("height", num(H));
    svg.attr("fill", style.background);
    svg.raw("/>\n");

    // Tracks: label and separator below each.
    svg.raw("<g id=\"tracks\">\n");
    for (std::size_t k = 0; k < geometry.tracks.size(); ++k) {
        const TrackGeometry& t = geometry.tracks[k];
        svg.raw("<g id=\"track-" + std::to_string(k) + "\" class=\"track track-" + std::string(to_string(t.kind)) +
                "\">\n");
        svg.line(0, t.bottom, W, t.bottom, style.track_separator_color, 1, "track-separator");
        svg.raw("</g>\n");
    }
    svg.raw("</g>\n");

    // Segments: header, grid, dual axis labels.
    svg.raw("<g id=\"segments\">\n");
    for (std::size_t k = 0; k < geometry.segments.size(); ++k) {
        const Segment& s = geometry.segments[k];
        svg.raw("<g id=\"segment-" + std::to_string(k) + "\" class=\"segment segment-" +
                std::string(to_string(s.kind)) + "\">\n");
        svg.text(s.mid(), header - 9, segment_title(s), style.header_font_size, style.header_color, "middle", "bold",
                 "segment-title");
        for (const Tick& t : compute_grid_ticks(s)) {
            svg.line(t.x, chrome, t.x, H, style.grid_color, 1, "grid");
            // Labels near the canvas edges grow inward instead of clipping.
            const double reach = 3.5 * style.axis_font_size;
            const std::string_view anchor = t.x < reach ? "start" : t.x > W - reach ? "end" : "middle";
            svg.text(t.x, header + 14, tick_label(t), style.axis_font_size, style.absolute_label_color, anchor, {},
                     "axis-absolute");
            if (story.date_of_birth && *story.date_of_birth <= t.date)
                svg.text(t.x, header + 30, "age " + std::to_string(age_on(*story.date_of_birth, t.date)),
                         style.axis_font_size, style.age_label_color, anchor, {}, "axis-age");
        }
        svg.raw("</g>\n");
    }
    for (std::size_t k = 1; k < geometry.segments.size(); ++k) {
        const double x = geometry.segments[k].left;
        svg.line(x, 0, x, H, style.boundary_color, 1.5, "segment-boundary");
    }
    svg.line(0, chrome, W, chrome, style.boundary_color, 1, "axis-rule");
    svg.raw("</g>\n");

    // Life events span every track.
    svg.raw("<g id=\"life-lines\">\n");
    for (const auto& t : geometry.tracks)
        for (const auto& l : t.lanes)
            for (const auto& b : l.boxes)
                if (story.find(b.event_id)->designation == Designation::LifeEvent)
                    svg.line(b.marker.x1, chrome, b.marker.x1, H, style.life_line_color, 1.5, "life-line");
    svg.raw("</g>\n");

    // Events: marker, bubble, badge, text.
    svg.raw("<g id=\"events\">\n");
    for (const auto& t : geometry.tracks) {
        for (const auto& l : t.lanes) {
            for (const auto& b : l.boxes) {
                const Event& e = *story.find(b.event_id);
                const DesignationStyle& ds = style.of(e.designation);
                svg.raw("<g");
                svg.attr("id", "event-" + e.id);
                svg.attr("class", "event designation-" + std::string(to_string(e.designation)));
                svg.raw(">\n");

                const double tip = b.marker.y - style.marker_radius - 1;
                svg.raw("<path class=\"bubble\"");
                svg.attr("d", bubble_path(b, tip));
                svg.attr("fill", ds.fill);
                svg.attr("stroke", ds.stroke);
                svg.raw(" stroke-width=\"1\"/>\n");

                if (b.marker.kind == MarkerKind::Circle) {
                    svg.raw("<circle class=\"marker marker-point\"");
                    svg.attr("cx", num(b.marker.x1));
                    svg.attr("cy", num(b.marker.y));
                    svg.attr("r", num(style.marker_radius));
                    svg.attr("fill", ds.stroke);
                    svg.raw("/>\n");
                } else {
                    svg.line(b.marker.x1, b.marker.y, b.marker.x2, b.marker.y, ds.stroke, style.marker_stroke_width,
                             "marker marker-range");
                }

                const double bx = b.left + layout.box_inset;
                const double by = b.top + layout.box_inset;
                svg.raw("<rect class=\"badge\"");
                svg.attr("x", num(bx));
                svg.attr("y", num(by + 1));
                svg.attr("width", num(layout.badge_width - 4));
                svg.attr("height", num(style.badge_font_size + 4));
                svg.attr("rx", "2");
                svg.attr("fill", ds.stroke);
                svg.raw("/>\n");
                svg.text(bx + (layout.badge_width - 4) / 2, by + style.badge_font_size + 2, ds.badge,
                         style.badge_font_size, "#FFFFFF", "middle", "bold", "badge-text");

                double y = by;
                for (const auto& line : b.title_lines) {
                    y += layout.title_line_height;
                    svg.text(bx + layout.badge_width, y - 4, line, style.title_font_size, "#000000", "start", "bold",
                             "title");
                }
                for (const auto& line : b.note_lines) {
                    y += layout.note_line_height;
                    svg.text(bx, y - 3, line, style.note_font_size, "#333333", "start", {}, "notes");
                }
                svg.raw("</g>\n");
            }
        }
    }
    svg.raw("</g>\n");

    // Track labels last, haloed so boxes never hide them.
    svg.raw("<g id=\"track-labels\">\n");
    for (const TrackGeometry& t : geometry.tracks) {
        std::string label = t.label == kLifeConcern ? std::string("Life") : t.label;
        if (t.broad_label) label = *t.broad_label + " / " + label;
        const double y = t.top + style.track_label_font_size + 2;
        svg.raw("<g stroke=\"" + style.background + "\" stroke-width=\"3\" stroke-linejoin=\"round\">\n");
        svg.text(4, y, label, style.track_label_font_size, style.background, "start", {}, "track-label-halo");
        svg.raw("</g>\n");
        svg.text(4, y, label, style.track_label_font_size, style.track_label_color, "start", {}, "track-label");
    }
    svg.raw("</g>\n");
    svg.raw("</svg>\n");
    return svg.take();
}

}  // namespace storyline
