#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calendar.hpp"
#include "model.hpp"

namespace storyline {

// ---------------------------------------------------------------------------
// Concern groups
// ---------------------------------------------------------------------------

struct SpecificGroup {
    std::string name;
    std::vector<std::string> event_ids;  // narrative order
    std::size_t first_index = 0;          // earliest narrative index

    bool operator==(const SpecificGroup&) const = default;
};

struct BroadGroup {
    std::string name;
    std::vector<SpecificGroup> specifics;
    std::size_t first_index = 0;

    bool operator==(const BroadGroup&) const = default;
};

struct ConcernGroups {
    std::vector<BroadGroup> broad_groups;
    std::vector<SpecificGroup> standalone;
    std::optional<SpecificGroup> other;
    std::optional<SpecificGroup> life;

    bool empty() const { return broad_groups.empty() && standalone.empty() && !other && !life; }

    bool operator==(const ConcernGroups&) const = default;
};

namespace grouping_detail {

inline std::vector<const Event*> narrative_order(const std::vector<Event>& events) {
    std::vector<const Event*> ordered;
    ordered.reserve(events.size());
    for (const Event& e : events) ordered.push_back(&e);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Event* a, const Event* b) { return a->narrative_index < b->narrative_index; });
    return ordered;
}

}  // namespace grouping_detail

/// Groups events by specific concern, nesting specific groups that share a
/// broad concern. A specific group whose events disagree on the broad concern
/// takes the broad concern of its first event that names one.
inline ConcernGroups build_concern_groups(const std::vector<Event>& events) {
    ConcernGroups groups;
    std::vector<SpecificGroup> specifics;
    std::vector<std::optional<std::string>> broad_of;
    std::map<std::string, std::size_t> slot;

    for (const Event* e : grouping_detail::narrative_order(events)) {
        if (e->specific_concern == kOtherConcern || e->specific_concern == kLifeConcern) {
            auto& sentinel = e->specific_concern == kOtherConcern ? groups.other : groups.life;
            if (!sentinel) sentinel = SpecificGroup{e->specific_concern, {}, e->narrative_index};
            sentinel->event_ids.push_back(e->id);
            continue;
        }
        auto [it, inserted] = slot.try_emplace(e->specific_concern, specifics.size());
        if (inserted) {
            specifics.push_back({e->specific_concern, {}, e->narrative_index});
            broad_of.emplace_back();
        }
        specifics[it->second].event_ids.push_back(e->id);
        if (!broad_of[it->second] && e->broad_concern && !e->broad_concern->empty())
            broad_of[it->second] = e->broad_concern;
    }

    std::map<std::string, std::size_t> broad_slot;
    for (std::size_t i = 0; i < specifics.size(); ++i) {
        if (!broad_of[i]) {
            groups.standalone.push_back(std::move(specifics[i]));
            continue;
        }
        auto [it, inserted] = broad_slot.try_emplace(*broad_of[i], groups.broad_groups.size());
        if (inserted) groups.broad_groups.push_back({*broad_of[i], {}, specifics[i].first_index});
        groups.broad_groups[it->second].specifics.push_back(std::move(specifics[i]));
    }
    return groups;
}

// ---------------------------------------------------------------------------
// Time groups
// ---------------------------------------------------------------------------

/// One end of one event.
struct TimeRef {
    std::string event_id;
    EventEnd which = EventEnd::Start;

    bool operator==(const TimeRef&) const = default;
    auto operator<=>(const TimeRef&) const = default;
};

struct DatedValue {
    std::string event_id;
    EventEnd which = EventEnd::Start;
    CalendarDate date;

    TimeRef ref() const { return {event_id, which}; }
    bool operator==(const DatedValue&) const = default;
};

struct TemporalCluster {
    CalendarDate min_date;
    CalendarDate max_date;
    std::vector<DatedValue> values;  // chronological, ties in input order

    bool operator==(const TemporalCluster&) const = default;
};

struct TimeGroups {
    std::vector<TimeRef> unspecified;
    std::vector<TimeRef> early;
    std::vector<TimeRef> current;
    std::vector<TemporalCluster> clusters;

    std::size_t dated_count() const {
        std::size_t n = 0;
        for (const auto& c : clusters) n += c.values.size();
        return n;
    }

    bool operator==(const TimeGroups&) const = default;
};

inline constexpr double kEpsBase = 30.0;
inline constexpr double kReferenceGapYears = 2.5;
inline constexpr double kNormalizedAxis = 100.0;

/// Neighbourhood radius on the [0, 100] axis for a date span in years.
inline double compute_eps(double span_years) {
    if (!(span_years > 0.0)) return kEpsBase;
    return std::min(kEpsBase, kReferenceGapYears / span_years * kNormalizedAxis);
}

/// Position of `day` on the normalized axis running from `first` to `last`.
inline double normalized_position(long day, long first, long last) {
    if (last == first) return 0.0;
    return static_cast<double>(day - first) / static_cast<double>(last - first) * kNormalizedAxis;
}

/// One-dimensional DBSCAN with minPts = 1. Every point is a core point, so
/// clusters are the runs of sorted positions separated by gaps wider than eps.
inline std::vector<TemporalCluster> cluster_dates(std::vector<DatedValue> dated) {
    std::vector<TemporalCluster> clusters;
    if (dated.empty()) return clusters;
    std::stable_sort(dated.begin(), dated.end(),
                     [](const DatedValue& a, const DatedValue& b) { return a.date < b.date; });

    const long first = to_day_number(dated.front().date);
    const long last = to_day_number(dated.back().date);
    const double eps = compute_eps(static_cast<double>(last - first) / kDaysPerYear);

    double prev = 0.0;
    for (std::size_t i = 0; i < dated.size(); ++i) {
        const double x = normalized_position(to_day_number(dated[i].date), first, last);
        if (i == 0 || x - prev > eps) clusters.push_back({dated[i].date, dated[i].date, {}});
        clusters.back().max_date = dated[i].date;
        clusters.back().values.push_back(std::move(dated[i]));
        prev = x;
    }
    return clusters;
}

/// Every resolved Date end of every event, in event order.
inline std::vector<DatedValue> dated_values(const std::vector<Event>& events) {
    std::vector<DatedValue> out;
    for (const Event& e : events)
        for (EventEnd which : {EventEnd::Start, EventEnd::End})
            if (auto d = e.time(which).calendar_date()) out.push_back({e.id, which, *d});
    return out;
}

/// Routes each end of each event to a time group. A relative age that was
/// never anchored to a date carries no position and is treated as
/// unspecified.
inline TimeGroups assign_time_groups(const std::vector<Event>& events) {
    TimeGroups groups;
    std::vector<DatedValue> dated;
    for (const Event* e : grouping_detail::narrative_order(events)) {
        for (EventEnd which : {EventEnd::Start, EventEnd::End}) {
            const TimeValue& v = e->time(which);
            switch (v.kind()) {
                case TimeKind::Early: groups.early.push_back({e->id, which}); break;
                case TimeKind::Current: groups.current.push_back({e->id, which}); break;
                case TimeKind::Date:
                    if (auto d = v.calendar_date()) {
                        dated.push_back({e->id, which, *d});
                        break;
                    }
                    [[fallthrough]];
                case TimeKind::Unspecified: groups.unspecified.push_back({e->id, which}); break;
            }
        }
    }
    groups.clusters = cluster_dates(std::move(dated));
    return groups;
}

struct GroupedStory {
    ConcernGroups concerns;
    TimeGroups times;

    bool operator==(const GroupedStory&) const = default;
};

inline GroupedStory group_story(const std::vector<Event>& events) {
    return {build_concern_groups(events), assign_time_groups(events)};
}

}  // namespace storyline
