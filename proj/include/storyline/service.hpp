#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "layout.hpp"
#include "model.hpp"
#include "narrative.hpp"
#include "render.hpp"
#include "story_json.hpp"

namespace storyline {

// ---------------------------------------------------------------------------
// Errors mapped onto HTTP status classes
// ---------------------------------------------------------------------------

class NotFoundError : public Error {
public:
    using Error::Error;
};

class BadRequestError : public Error {
public:
    using Error::Error;
};

/// Expected revision did not match the stored one.
class ConflictError : public Error {
public:
    ConflictError(std::uint64_t expected, std::uint64_t current)
        : Error("revision mismatch: expected " + std::to_string(expected) + ", current " + std::to_string(current)),
          current_(current) {}

    std::uint64_t current_revision() const noexcept { return current_; }

private:
    std::uint64_t current_;
};

/// A mutation would introduce invariant violations.
class ValidationFailedError : public Error {
public:
    explicit ValidationFailedError(ValidationReport report)
        : Error("mutation violates story invariants"), report_(std::move(report)) {}

    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct ParseReport {
    ParserMode mode = ParserMode::RuleBased;
    bool used_fallback = false;
    ValidationReport rejected;
    std::vector<std::string> not_grounded;

    bool operator==(const ParseReport&) const = default;
};

struct StoryRecord {
    std::string id;
    std::uint64_t revision = 0;
    std::string created;  // ISO 8601 UTC
    std::string updated;
    HealthStory story;
    ValidationReport violations;
    ParseReport parse;

    bool operator==(const StoryRecord&) const = default;
};

inline std::string_view to_string(ParserMode m) {
    switch (m) {
        case ParserMode::RuleBased: return "rule";
        case ParserMode::Remote: return "remote";
        case ParserMode::RemoteWithFallback: return "remote-with-fallback";
    }
    return "";
}

inline Json to_json(const StoryRecord& r) {
    Json j;
    j["id"] = r.id;
    j["revision"] = r.revision;
    j["created"] = r.created;
    j["updated"] = r.updated;
    j["story"] = to_json(r.story);
    j["violations"] = to_json(r.violations);
    Json parse;
    parse["mode"] = to_string(r.parse.mode);
    parse["usedFallback"] = r.parse.used_fallback;
    parse["rejected"] = to_json(r.parse.rejected);
    parse["notGrounded"] = r.parse.not_grounded;
    j["parse"] = std::move(parse);
    return j;
}

namespace service_detail {

inline ValidationReport violations_from_json(const Json& arr) {
    ValidationReport out;
    if (!arr.is_array()) return out;
    for (const Json& v : arr) {
        const std::string name = v.value("rule", "");
        for (int k = 0; k <= static_cast<int>(Rule::BeforeBirth); ++k)
            if (to_string(static_cast<Rule>(k)) == name)
                out.push_back({v.value("eventId", ""), static_cast<Rule>(k), v.value("detail", "")});
    }
    return out;
}

template <typename F>
auto schema_checked(F&& f) {
    try {
        return f();
    } catch (const SchemaError& e) {
        throw BadRequestError(e.what());
    }
}

}  // namespace service_detail

inline StoryRecord record_from_json(const Json& j) {
    StoryRecord r;
    r.id = json_detail::require_string(j, "id", "$");
    const Json& rev = json_detail::require(j, "revision", "$");
    if (!rev.is_number_unsigned()) throw SchemaError("$.revision", "expected a non-negative integer");
    r.revision = rev.get<std::uint64_t>();
    r.created = j.value("created", "");
    r.updated = j.value("updated", "");
    r.story = story_from_json(json_detail::require(j, "story", "$"));
    r.violations = service_detail::violations_from_json(j.value("violations", Json::array()));
    if (auto it = j.find("parse"); it != j.end() && it->is_object()) {
        r.parse.mode = parser_mode_from_string(it->value("mode", "rule")).value_or(ParserMode::RuleBased);
        r.parse.used_fallback = it->value("usedFallback", false);
        r.parse.rejected = service_detail::violations_from_json(it->value("rejected", Json::array()));
        r.parse.not_grounded = it->value("notGrounded", std::vector<std::string>{});
    }
    return r;
}

/// Anchors every relative age that has a stated age, when the story has a
/// date of birth. Unlike resolve_relative_dates this never throws; values it
/// cannot anchor remain and are reported by validate_story.
inline void anchor_relative_dates(HealthStory& story) {
    if (!story.date_of_birth) return;
    for (Event& e : story.events)
        for (TimeValue* v : {&e.start, &e.end}) {
            if (!v->is_date()) continue;
            DateValue& dv = v->date_value();
            if (dv.origin != DateOrigin::RelativeAge || !dv.stated_age) continue;
            dv.date = add_years(*story.date_of_birth, *dv.stated_age);
            dv.precision = Precision::Year;
        }
}

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

struct ServiceConfig {
    std::filesystem::path data_dir = "storyline-data";
    LayoutConfig layout;
    StyleConfig style;
    /// Used for remote parser modes; may be null.
    std::shared_ptr<RemoteParserClient> remote;
    /// Fixed "today" for relative expressions; the wall clock when unset.
    std::optional<CalendarDate> reference_date;
};

struct CreateStoryRequest {
    std::string name;
    std::optional<CalendarDate> date_of_birth;
    std::string narrative;
    ParserMode mode = ParserMode::RuleBased;
    std::optional<CalendarDate> reference_date;
    /// Import an existing story document instead of parsing.
    std::optional<HealthStory> story;
};

/// Stories persisted as one canonical JSON document each. Mutations of one
/// story are serialized; reads take shared locks only.
class StoryService {
public:
    explicit StoryService(ServiceConfig config) : config_(std::move(config)) {
        std::filesystem::create_directories(config_.data_dir);
        load_all();
    }

    StoryService(const StoryService&) = delete;
    StoryService& operator=(const StoryService&) = delete;

    const ServiceConfig& config() const { return config_; }

    StoryRecord create_story(const CreateStoryRequest& req) {
        if (req.name.find_first_not_of(" \t\r\n") == std::string::npos && !req.story)
            throw BadRequestError("profile name is required");

        StoryRecord record;
        if (req.story) {
            record.story = *req.story;
        } else {
            record.story.name = req.name;
            record.story.date_of_birth = req.date_of_birth;
            record.story.source_narrative = req.narrative;
            ParserConfig pc;
            pc.mode = req.mode;
            pc.reference_date = req.reference_date ? req.reference_date : config_.reference_date;
            auto outcome = parse_narrative(req.narrative, Profile{req.name, req.date_of_birth}, pc, config_.remote.get());
            record.story.events = std::move(outcome.events);
            record.parse = {req.mode, outcome.used_fallback, std::move(outcome.rejected),
                            std::move(outcome.not_grounded)};
        }
        anchor_relative_dates(record.story);
        record.violations = validate_story(record.story);
        record.revision = 1;
        record.created = record.updated = now_iso();

        auto entry = std::make_shared<Entry>();
        {
            std::unique_lock lock(map_mutex_);
            do {
                record.id = new_id();
            } while (entries_.count(record.id));
            entry->record = record;
            persist(entry->record);
            entries_[record.id] = entry;
        }
        return record;
    }

    StoryRecord get(const std::string& id) const {
        auto entry = find(id);
        std::shared_lock lock(entry->mutex);
        return entry->record;
    }

    std::vector<std::string> list() const {
        std::shared_lock lock(map_mutex_);
        std::vector<std::string> ids;
        for (const auto& [id, _] : entries_) ids.push_back(id);
        return ids;
    }

    Event get_event(const std::string& id, const std::string& event_id) const {
        auto entry = find(id);
        std::shared_lock lock(entry->mutex);
        const Event* e = entry->record.story.find(event_id);
        if (!e) throw NotFoundError("no event '" + event_id + "' in story '" + id + "'");
        return *e;
    }

    /// Replaces the top-level event fields present in `patch`.
    StoryRecord update_event(const std::string& id, const std::string& event_id, const Json& patch,
                             std::optional<std::uint64_t> expected_revision = std::nullopt) {
        if (!patch.is_object()) throw BadRequestError("patch must be a JSON object");
        return mutate(id, expected_revision, [&](HealthStory& story) {
            auto it = std::find_if(story.events.begin(), story.events.end(),
                                   [&](const Event& e) { return e.id == event_id; });
            if (it == story.events.end()) throw NotFoundError("no event '" + event_id + "' in story '" + id + "'");
            Json merged = to_json(*it);
            for (const auto& [key, value] : patch.items()) {
                if (!merged.contains(key)) throw BadRequestError("unknown event field '" + key + "'");
                if (key == "id" && value != merged["id"]) throw BadRequestError("event id cannot be changed");
                merged[key] = value;
            }
            *it = service_detail::schema_checked([&] { return event_from_json(merged, "$", it->narrative_index); });
        });
    }

    StoryRecord add_event(const std::string& id, const Json& body,
                          std::optional<std::uint64_t> expected_revision = std::nullopt) {
        if (!body.is_object()) throw BadRequestError("event must be a JSON object");
        return mutate(id, expected_revision, [&](HealthStory& story) {
            Json j = body;
            if (!j.contains("id")) j["id"] = next_event_id(story);
            Event e = service_detail::schema_checked([&] { return event_from_json(j, "$", story.next_narrative_index()); });
            story.events.push_back(std::move(e));
        });
    }

    StoryRecord delete_event(const std::string& id, const std::string& event_id,
                             std::optional<std::uint64_t> expected_revision = std::nullopt) {
        return mutate(id, expected_revision, [&](HealthStory& story) {
            auto it = std::find_if(story.events.begin(), story.events.end(),
                                   [&](const Event& e) { return e.id == event_id; });
            if (it == story.events.end()) throw NotFoundError("no event '" + event_id + "' in story '" + id + "'");
            story.events.erase(it);
        });
    }

    /// Geometry document for the current revision.
    std::string layout_document(const std::string& id) { return artifacts(id).layout; }

    std::string artifact_svg(const std::string& id) { return artifacts(id).svg; }

private:
    struct Artifacts {
        std::uint64_t revision = 0;
        std::string layout;
        std::string svg;
    };

    struct Entry {
        mutable std::shared_mutex mutex;
        StoryRecord record;
        std::mutex artifact_mutex;
        std::optional<Artifacts> artifacts;
    };

    static std::string next_event_id(const HealthStory& story) {
        for (std::size_t n = story.events.size() + 1;; ++n) {
            std::string id = "e" + std::to_string(n);
            if (!story.find(id)) return id;
        }
    }

    static std::string now_iso() {
        const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    std::string new_id() {
        thread_local std::mt19937_64 rng{std::random_device{}()};
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
        return buf;
    }

    std::shared_ptr<Entry> find(const std::string& id) const {
        std::shared_lock lock(map_mutex_);
        auto it = entries_.find(id);
        if (it == entries_.end()) throw NotFoundError("no story '" + id + "'");
        return it->second;
    }

    template <typename F>
    StoryRecord mutate(const std::string& id, std::optional<std::uint64_t> expected, F&& change) {
        auto entry = find(id);
        std::unique_lock lock(entry->mutex);
        if (expected && *expected != entry->record.revision) throw ConflictError(*expected, entry->record.revision);

        StoryRecord next = entry->record;
        change(next.story);
        std::stable_sort(next.story.events.begin(), next.story.events.end(),
                         [](const Event& a, const Event& b) { return a.narrative_index < b.narrative_index; });
        anchor_relative_dates(next.story);
        next.violations = validate_story(next.story);

        // Violations already present (say, an unresolved age) do not block edits.
        ValidationReport introduced;
        for (const Violation& v : next.violations)
            if (std::find(entry->record.violations.begin(), entry->record.violations.end(), v) ==
                entry->record.violations.end())
                introduced.push_back(v);
        if (!introduced.empty()) throw ValidationFailedError(std::move(introduced));

        next.revision += 1;
        next.updated = now_iso();
        persist(next);
        entry->record = std::move(next);
        return entry->record;
    }

    Artifacts artifacts(const std::string& id) {
        auto entry = find(id);
        StoryRecord record;
        {
            std::shared_lock lock(entry->mutex);
            std::lock_guard cache(entry->artifact_mutex);
            if (entry->artifacts && entry->artifacts->revision == entry->record.revision) return *entry->artifacts;
            record = entry->record;
        }
        Artifacts fresh;
        fresh.revision = record.revision;
        const LayoutGeometry geometry = timeline_layout(record.story, config_.layout);
        fresh.layout = to_json(geometry).dump(2) + "\n";
        fresh.svg = render_svg(geometry, record.story, config_.style, config_.layout);
        std::lock_guard cache(entry->artifact_mutex);
        if (!entry->artifacts || entry->artifacts->revision < fresh.revision) entry->artifacts = fresh;
        return fresh;
    }

    std::filesystem::path path_of(const std::string& id) const { return config_.data_dir / (id + ".json"); }

    void persist(const StoryRecord& record) const {
        static std::atomic<unsigned long> counter{0};
        const auto target = path_of(record.id);
        auto temp = target;
        temp += ".tmp" + std::to_string(counter++);
        {
            std::ofstream out(temp, std::ios::binary | std::ios::trunc);
            out << to_json(record).dump(2) << "\n";
            out.flush();
            if (!out) throw Error("cannot write " + temp.string());
        }
        std::filesystem::rename(temp, target);
    }

    void load_all() {
        for (const auto& item : std::filesystem::directory_iterator(config_.data_dir)) {
            if (!item.is_regular_file() || item.path().extension() != ".json") continue;
            std::ifstream in(item.path(), std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            auto entry = std::make_shared<Entry>();
            entry->record = record_from_json(parse_json_text(ss.str()));
            entries_[entry->record.id] = std::move(entry);
        }
    }

    ServiceConfig config_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
};

}  // namespace storyline
