#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "model.hpp"

namespace storyline {

/// Insertion-ordered JSON keeps emitted key order stable and readable.
using Json = nlohmann::ordered_json;

namespace json_detail {

inline std::string_view to_string(Precision p) {
    switch (p) {
        case Precision::Day: return "day";
        case Precision::Month: return "month";
        case Precision::Year: return "year";
    }
    return "";
}

inline std::string_view to_string(DateOrigin o) { return o == DateOrigin::Absolute ? "absolute" : "relativeAge"; }

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path + "." + key, "missing");
    return *it;
}

inline std::string require_string(const Json& obj, const char* key, const std::string& path) {
    const Json& v = require(obj, key, path);
    if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

inline std::optional<std::string> optional_string(const Json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw SchemaError(path + "." + key, "expected a string or null");
    return it->get<std::string>();
}

inline CalendarDate parse_date_field(const std::string& text, const std::string& path) {
    auto d = parse_iso_date(text);
    if (!d) throw SchemaError(path, "expected an ISO date YYYY-MM-DD, got '" + text + "'");
    return *d;
}

}  // namespace json_detail

inline Json to_json(const TimeValue& v) {
    Json j;
    switch (v.kind()) {
        case TimeKind::Unspecified: j["kind"] = "unspecified"; break;
        case TimeKind::Early: j["kind"] = "early"; break;
        case TimeKind::Current: j["kind"] = "current"; break;
        case TimeKind::Date: {
            const DateValue& dv = v.date_value();
            j["kind"] = "date";
            j["date"] = dv.date ? Json(format_iso(*dv.date)) : Json(nullptr);
            j["precision"] = json_detail::to_string(dv.precision);
            j["origin"] = json_detail::to_string(dv.origin);
            if (dv.stated_age) j["statedAge"] = *dv.stated_age;
            break;
        }
    }
    return j;
}

inline TimeValue time_value_from_json(const Json& j, const std::string& path) {
    using namespace json_detail;
    const std::string kind = require_string(j, "kind", path);
    if (kind == "unspecified") return TimeValue::unspecified();
    if (kind == "early") return TimeValue::early();
    if (kind == "current") return TimeValue::current();
    if (kind != "date") throw SchemaError(path + ".kind", "unknown time kind '" + kind + "'");

    DateValue dv;
    if (auto text = optional_string(j, "date", path)) dv.date = parse_date_field(*text, path + ".date");

    const std::string precision = require_string(j, "precision", path);
    if (precision == "day") dv.precision = Precision::Day;
    else if (precision == "month") dv.precision = Precision::Month;
    else if (precision == "year") dv.precision = Precision::Year;
    else throw SchemaError(path + ".precision", "unknown precision '" + precision + "'");

    const std::string origin = require_string(j, "origin", path);
    if (origin == "absolute") dv.origin = DateOrigin::Absolute;
    else if (origin == "relativeAge") dv.origin = DateOrigin::RelativeAge;
    else throw SchemaError(path + ".origin", "unknown origin '" + origin + "'");

    if (auto it = j.find("statedAge"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw SchemaError(path + ".statedAge", "expected an integer");
        dv.stated_age = it->get<int>();
    }
    if (dv.origin == DateOrigin::Absolute && !dv.date) throw SchemaError(path + ".date", "absolute date missing");
    return TimeValue::date(std::move(dv));
}

inline Json to_json(const Event& e) {
    Json j;
    j["id"] = e.id;
    j["title"] = e.title;
    j["notes"] = e.notes;
    j["designation"] = to_string(e.designation);
    j["specificConcern"] = e.specific_concern;
    j["broadConcern"] = e.broad_concern ? Json(*e.broad_concern) : Json(nullptr);
    j["start"] = to_json(e.start);
    j["end"] = to_json(e.end);
    j["narrativeIndex"] = e.narrative_index;
    return j;
}

/// `default_index` is used when the document carries no narrativeIndex
/// (remote parser payloads list events in narrative order).
inline Event event_from_json(const Json& j, const std::string& path, std::size_t default_index) {
    using namespace json_detail;
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    Event e;
    e.id = require_string(j, "id", path);
    e.title = require_string(j, "title", path);
    e.notes = optional_string(j, "notes", path).value_or("");
    const std::string designation = require_string(j, "designation", path);
    auto d = designation_from_string(designation);
    if (!d) throw SchemaError(path + ".designation", "unknown designation '" + designation + "'");
    e.designation = *d;
    e.specific_concern = require_string(j, "specificConcern", path);
    e.broad_concern = optional_string(j, "broadConcern", path);
    e.start = j.contains("start") ? time_value_from_json(j["start"], path + ".start") : TimeValue::unspecified();
    e.end = j.contains("end") ? time_value_from_json(j["end"], path + ".end") : TimeValue::unspecified();
    e.narrative_index = default_index;
    if (auto it = j.find("narrativeIndex"); it != j.end() && !it->is_null()) {
        if (!it->is_number_unsigned()) throw SchemaError(path + ".narrativeIndex", "expected a non-negative integer");
        e.narrative_index = it->get<std::size_t>();
    }
    return e;
}

inline Json to_json(const HealthStory& s) {
    Json j;
    j["name"] = s.name;
    j["dateOfBirth"] = s.date_of_birth ? Json(format_iso(*s.date_of_birth)) : Json(nullptr);
    j["sourceNarrative"] = s.source_narrative ? Json(*s.source_narrative) : Json(nullptr);
    j["events"] = Json::array();
    for (const Event& e : s.events) j["events"].push_back(to_json(e));
    return j;
}

inline std::vector<Event> events_from_json(const Json& arr, const std::string& path) {
    if (!arr.is_array()) throw SchemaError(path, "expected an array");
    std::vector<Event> events;
    events.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::size_t fallback = events.empty() ? 0 : events.back().narrative_index + 1;
        events.push_back(event_from_json(arr[i], path + "[" + std::to_string(i) + "]", fallback));
    }
    return events;
}

inline HealthStory story_from_json(const Json& j) {
    using namespace json_detail;
    if (!j.is_object()) throw SchemaError("$", "expected an object");
    HealthStory s;
    s.name = require_string(j, "name", "$");
    if (auto dob = optional_string(j, "dateOfBirth", "$")) s.date_of_birth = parse_date_field(*dob, "$.dateOfBirth");
    s.source_narrative = optional_string(j, "sourceNarrative", "$");
    s.events = events_from_json(require(j, "events", "$"), "$.events");
    return s;
}

/// Parses text into JSON, converting reader failures into ParseError.
inline Json parse_json_text(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
}

/// Canonical, byte-deterministic story document (two-space indent,
/// trailing newline).
inline std::string serialize_story(const HealthStory& story) { return to_json(story).dump(2) + "\n"; }

inline HealthStory deserialize_story(std::string_view document) {
    return story_from_json(parse_json_text(document));
}

inline Json to_json(const ValidationReport& report) {
    Json arr = Json::array();
    for (const Violation& v : report) {
        Json item;
        item["eventId"] = v.event_id;
        item["rule"] = to_string(v.rule);
        item["detail"] = v.detail;
        arr.push_back(std::move(item));
    }
    return arr;
}

}  // namespace storyline
