#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "calendar.hpp"
#include "error.hpp"

namespace storyline {

// ---------------------------------------------------------------------------
// Designation
// ---------------------------------------------------------------------------

enum class Designation { Symptom, Medication, Treatment, Provider, Test, Procedure, Diagnosis, LifeEvent };

inline constexpr std::array<Designation, 8> kAllDesignations = {
    Designation::Symptom,   Designation::Medication, Designation::Treatment, Designation::Provider,
    Designation::Test,      Designation::Procedure,  Designation::Diagnosis, Designation::LifeEvent,
};

inline constexpr std::string_view to_string(Designation d) {
    switch (d) {
        case Designation::Symptom: return "Symptom";
        case Designation::Medication: return "Medication";
        case Designation::Treatment: return "Treatment";
        case Designation::Provider: return "Provider";
        case Designation::Test: return "Test";
        case Designation::Procedure: return "Procedure";
        case Designation::Diagnosis: return "Diagnosis";
        case Designation::LifeEvent: return "LifeEvent";
    }
    return "";
}

inline std::optional<Designation> designation_from_string(std::string_view s) {
    for (Designation d : kAllDesignations)
        if (to_string(d) == s) return d;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// TimeValue
// ---------------------------------------------------------------------------

enum class Precision { Day, Month, Year };
enum class DateOrigin { Absolute, RelativeAge };

/// Payload of the Date variant. `date` is absent only for a relative age
/// that has not been anchored to a date of birth yet.
struct DateValue {
    std::optional<CalendarDate> date;
    Precision precision = Precision::Day;
    DateOrigin origin = DateOrigin::Absolute;
    std::optional<int> stated_age;

    bool operator==(const DateValue&) const = default;
};

enum class TimeKind { Unspecified, Early, Date, Current };

class TimeValue {
public:
    TimeValue() = default;

    static TimeValue unspecified() { return TimeValue{}; }
    static TimeValue early() { return TimeValue{EarlyTag{}}; }
    static TimeValue current() { return TimeValue{CurrentTag{}}; }
    static TimeValue date(DateValue value) { return TimeValue{std::move(value)}; }

    static TimeValue absolute(const CalendarDate& d, Precision p = Precision::Day) {
        return date(DateValue{d, p, DateOrigin::Absolute, std::nullopt});
    }

    /// Relative age anchored to `dob` on its anniversary, year precision.
    static TimeValue relative_age(int age, std::optional<CalendarDate> dob) {
        std::optional<CalendarDate> anchored;
        if (dob) anchored = add_years(*dob, age);
        return date(DateValue{anchored, Precision::Year, DateOrigin::RelativeAge, age});
    }

    TimeKind kind() const { return static_cast<TimeKind>(value_.index()); }
    bool is_date() const { return kind() == TimeKind::Date; }
    bool is_unspecified() const { return kind() == TimeKind::Unspecified; }

    const DateValue& date_value() const { return std::get<DateValue>(value_); }
    DateValue& date_value() { return std::get<DateValue>(value_); }

    /// Calendar date if this is a Date with a resolved calendar day.
    std::optional<CalendarDate> calendar_date() const {
        if (!is_date()) return std::nullopt;
        return date_value().date;
    }

    bool operator==(const TimeValue&) const = default;

private:
    struct UnspecifiedTag {
        bool operator==(const UnspecifiedTag&) const = default;
    };
    struct EarlyTag {
        bool operator==(const EarlyTag&) const = default;
    };
    struct CurrentTag {
        bool operator==(const CurrentTag&) const = default;
    };

    explicit TimeValue(EarlyTag t) : value_(t) {}
    explicit TimeValue(CurrentTag t) : value_(t) {}
    explicit TimeValue(DateValue v) : value_(std::move(v)) {}

    // Index order matches TimeKind.
    std::variant<UnspecifiedTag, EarlyTag, DateValue, CurrentTag> value_;
};

// ---------------------------------------------------------------------------
// Event and story
// ---------------------------------------------------------------------------

inline constexpr std::string_view kOtherConcern = "Other";
inline constexpr std::string_view kLifeConcern = "LifeConcern";

enum class EventEnd { Start, End };

inline constexpr std::string_view to_string(EventEnd e) { return e == EventEnd::Start ? "start" : "end"; }

struct Event {
    std::string id;
    std::string title;
    std::string notes;
    Designation designation = Designation::Symptom;
    std::string specific_concern{kOtherConcern};
    std::optional<std::string> broad_concern;
    TimeValue start;
    TimeValue end;
    std::size_t narrative_index = 0;

    const TimeValue& time(EventEnd which) const { return which == EventEnd::Start ? start : end; }

    bool operator==(const Event&) const = default;
};

struct HealthStory {
    std::string name;
    std::optional<CalendarDate> date_of_birth;
    std::optional<std::string> source_narrative;
    std::vector<Event> events;

    const Event* find(std::string_view id) const {
        auto it = std::find_if(events.begin(), events.end(), [&](const Event& e) { return e.id == id; });
        return it == events.end() ? nullptr : &*it;
    }

    std::size_t next_narrative_index() const {
        std::size_t next = 0;
        for (const auto& e : events) next = std::max(next, e.narrative_index + 1);
        return next;
    }

    bool operator==(const HealthStory&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Rule {
    EmptyTitle,
    DuplicateId,
    NarrativeOrder,
    LifeConcernCoupling,
    StatedAgeOrigin,
    AnchorDay,
    UnresolvedRelativeDate,
    StartAfterEnd,
    BeforeBirth,
};

inline constexpr std::string_view to_string(Rule r) {
    switch (r) {
        case Rule::EmptyTitle: return "empty-title";
        case Rule::DuplicateId: return "duplicate-id";
        case Rule::NarrativeOrder: return "narrative-order";
        case Rule::LifeConcernCoupling: return "life-concern-coupling";
        case Rule::StatedAgeOrigin: return "stated-age-origin";
        case Rule::AnchorDay: return "anchor-day";
        case Rule::UnresolvedRelativeDate: return "unresolved-relative-date";
        case Rule::StartAfterEnd: return "start-after-end";
        case Rule::BeforeBirth: return "before-birth";
    }
    return "";
}

struct Violation {
    std::string event_id;
    Rule rule;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

namespace detail {

/// Position on the coarse timeline used for start/end ordering checks.
/// Unspecified has no position.
inline std::optional<int> coarse_rank(const TimeValue& v) {
    switch (v.kind()) {
        case TimeKind::Early: return 0;
        case TimeKind::Date: return 1;
        case TimeKind::Current: return 2;
        default: return std::nullopt;
    }
}

inline void check_time_value(const Event& e, const TimeValue& v, std::string_view which,
                             const std::optional<CalendarDate>& dob, ValidationReport& out) {
    if (!v.is_date()) return;
    const DateValue& dv = v.date_value();
    const bool relative = dv.origin == DateOrigin::RelativeAge;
    if (relative != dv.stated_age.has_value() || (dv.stated_age && *dv.stated_age < 0))
        out.push_back({e.id, Rule::StatedAgeOrigin, std::string(which)});
    if (!dv.date) {
        if (relative)
            out.push_back({e.id, Rule::UnresolvedRelativeDate, std::string(which)});
        else
            out.push_back({e.id, Rule::AnchorDay, std::string(which) + ": missing calendar date"});
        return;
    }
    const CalendarDate& d = *dv.date;
    bool anchored = true;
    if (dv.precision == Precision::Month) {
        anchored = d.day() == std::chrono::day{1};
    } else if (dv.precision == Precision::Year) {
        if (relative) {
            // Anniversary convention needs the date of birth; without it the
            // anchor cannot be checked.
            if (dob && dv.stated_age) anchored = d == add_years(*dob, *dv.stated_age);
        } else {
            anchored = d.month() == std::chrono::January && d.day() == std::chrono::day{1};
        }
    }
    if (!anchored) out.push_back({e.id, Rule::AnchorDay, std::string(which) + ": " + format_iso(d)});
    if (dob && d < *dob) out.push_back({e.id, Rule::BeforeBirth, std::string(which) + ": " + format_iso(d)});
}

}  // namespace detail

/// Every violated invariant, in event order. Rules within an event are
/// reported in a fixed order, so the report is a pure function of the story.
inline ValidationReport validate_story(const HealthStory& story) {
    ValidationReport report;
    std::set<std::string> seen;
    std::optional<std::size_t> previous_index;
    for (const Event& e : story.events) {
        if (e.title.find_first_not_of(" \t\r\n") == std::string::npos)
            report.push_back({e.id, Rule::EmptyTitle, ""});
        if (!seen.insert(e.id).second) report.push_back({e.id, Rule::DuplicateId, ""});
        if (previous_index && e.narrative_index <= *previous_index)
            report.push_back({e.id, Rule::NarrativeOrder, std::to_string(e.narrative_index)});
        previous_index = e.narrative_index;

        const bool life_event = e.designation == Designation::LifeEvent;
        const bool life_concern = e.specific_concern == kLifeConcern;
        if (life_event != life_concern) report.push_back({e.id, Rule::LifeConcernCoupling, e.specific_concern});

        detail::check_time_value(e, e.start, "start", story.date_of_birth, report);
        detail::check_time_value(e, e.end, "end", story.date_of_birth, report);

        auto start_date = e.start.calendar_date();
        auto end_date = e.end.calendar_date();
        auto start_rank = detail::coarse_rank(e.start);
        auto end_rank = detail::coarse_rank(e.end);
        if (start_date && end_date) {
            if (*start_date > *end_date)
                report.push_back({e.id, Rule::StartAfterEnd, format_iso(*start_date) + " > " + format_iso(*end_date)});
        } else if (start_rank && end_rank && *start_rank > *end_rank) {
            report.push_back({e.id, Rule::StartAfterEnd, "variant order"});
        }
    }
    return report;
}

/// Anchors every relative age to the date of birth (anniversary convention,
/// year precision). Absolute dates and non-date values pass through.
inline HealthStory resolve_relative_dates(HealthStory story) {
    std::vector<std::string> unresolved;
    for (Event& e : story.events) {
        bool missing = false;
        for (TimeValue* v : {&e.start, &e.end}) {
            if (!v->is_date()) continue;
            DateValue& dv = v->date_value();
            if (dv.origin != DateOrigin::RelativeAge) continue;
            if (!story.date_of_birth || !dv.stated_age) {
                missing = true;
                continue;
            }
            dv.date = add_years(*story.date_of_birth, *dv.stated_age);
            dv.precision = Precision::Year;
        }
        if (missing) unresolved.push_back(e.id);
    }
    if (!unresolved.empty()) throw UnresolvableRelativeDateError(std::move(unresolved));
    return story;
}

/// An event is drawn as a point unless it has two distinct known endpoints.
inline bool is_point_event(const Event& e) {
    if (e.start.is_unspecified() || e.end.is_unspecified()) return true;
    if (e.start.kind() != e.end.kind()) return false;
    if (e.start.is_date()) return e.start.calendar_date() == e.end.calendar_date();
    return true;
}

}  // namespace storyline
