#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "embedded_data.hpp"
#include "error.hpp"
#include "lexicon.hpp"
#include "model.hpp"
#include "story_json.hpp"
#include "temporal.hpp"
#include "text.hpp"

namespace storyline {

// ---------------------------------------------------------------------------
// Lexicon and configuration
// ---------------------------------------------------------------------------

/// Keyword tables for designation and concern detection plus the word lists
/// used to build titles.
struct NarrativeLexicon {
    struct Keyword {
        std::vector<std::string> tokens;
        bool stem = false;  // last token matches as a word prefix
    };
    struct DesignationRule {
        Keyword keyword;
        Designation designation;
    };
    struct ConcernRule {
        Keyword keyword;
        std::string specific;
        std::optional<std::string> broad;
    };

    std::string version;
    std::vector<DesignationRule> designations;
    std::vector<ConcernRule> concerns;
    std::vector<std::vector<std::string>> lead_phrases;  // longest first
    std::set<std::string> stopwords;
    std::set<std::string> conjunctions;

    static NarrativeLexicon from_table(const LexiconTable& table) {
        NarrativeLexicon lex;
        lex.version = table.version;
        std::set<std::string> designation_keys;
        std::set<std::string> concern_keys;
        auto fail = [](const LexiconRule& r, const std::string& why) {
            return Error("narrative lexicon line " + std::to_string(r.line) + ": " + why);
        };
        auto lowercase_key = [&](const LexiconRule& r) {
            if (text::to_lower(r.pattern) != r.pattern) throw fail(r, "keys must be lowercase");
        };
        for (const LexiconRule& r : table.rules) {
            const auto dash = r.kind.find('-');
            const std::string family = r.kind.substr(0, dash);
            const std::string form = dash == std::string::npos ? "" : r.kind.substr(dash + 1);
            if (family == "designation" || family == "concern") {
                if (form != "word" && form != "stem" && form != "phrase") throw fail(r, "unknown keyword form");
                lowercase_key(r);
                Keyword kw{text::pattern_tokens(r.pattern), form == "stem"};
                if (family == "designation") {
                    auto d = designation_from_string(r.variant);
                    if (!d) throw fail(r, "unknown designation '" + r.variant + "'");
                    if (!designation_keys.insert(r.pattern).second) throw fail(r, "duplicate key '" + r.pattern + "'");
                    lex.designations.push_back({std::move(kw), *d});
                } else {
                    if (!concern_keys.insert(r.pattern).second) throw fail(r, "duplicate key '" + r.pattern + "'");
                    auto slash = r.variant.find('/');
                    ConcernRule rule{std::move(kw), r.variant.substr(0, slash), std::nullopt};
                    if (slash != std::string::npos) rule.broad = r.variant.substr(slash + 1);
                    lex.concerns.push_back(std::move(rule));
                }
            } else if (r.kind == "lead-phrase") {
                lex.lead_phrases.push_back(text::pattern_tokens(r.pattern));
            } else if (r.kind == "stopword") {
                lex.stopwords.insert(r.pattern);
            } else if (r.kind == "conjunction") {
                lex.conjunctions.insert(r.pattern);
            } else {
                throw fail(r, "unknown pattern kind '" + r.kind + "'");
            }
        }
        std::stable_sort(lex.lead_phrases.begin(), lex.lead_phrases.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        return lex;
    }

    static NarrativeLexicon from_text(std::string_view tsv) { return from_table(parse_lexicon(tsv)); }

    static const NarrativeLexicon& builtin() {
        static const NarrativeLexicon lex = from_text(embedded::kNarrativeLexicon);
        return lex;
    }
};

enum class ParserMode { RuleBased, Remote, RemoteWithFallback };

inline std::optional<ParserMode> parser_mode_from_string(std::string_view s) {
    if (s == "rule" || s == "rule-based") return ParserMode::RuleBased;
    if (s == "remote") return ParserMode::Remote;
    if (s == "remote-with-fallback" || s == "fallback") return ParserMode::RemoteWithFallback;
    return std::nullopt;
}

struct ParserConfig {
    const NarrativeLexicon* narrative = &NarrativeLexicon::builtin();
    const TemporalLexicon* temporal = &TemporalLexicon::builtin();
    ParserMode mode = ParserMode::RuleBased;
    /// Anchor for "N years ago"; today when unset.
    std::optional<CalendarDate> reference_date;

    CalendarDate reference() const {
        if (reference_date) return *reference_date;
        return CalendarDate{std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now())};
    }
};

struct Profile {
    std::string name;
    std::optional<CalendarDate> date_of_birth;
};

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

struct Clause {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;

    bool operator==(const Clause&) const = default;
};

namespace narrative_detail {

inline bool is_abbreviation(std::string_view text, std::size_t dot) {
    static const std::set<std::string, std::less<>> kAbbrev = {"dr", "mr", "mrs", "ms", "st", "vs", "jr", "sr",
                                                               "e.g", "i.e", "approx", "etc"};
    std::size_t b = dot;
    while (b > 0 && !text::is_space(text[b - 1])) --b;
    std::string word = text::to_lower(text.substr(b, dot - b));
    while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) word.erase(0, 1);
    return kAbbrev.count(word) > 0;
}

inline void push_clause(std::string_view text, std::size_t b, std::size_t e, std::vector<Clause>& out) {
    while (b < e && text::is_space(text[b])) ++b;
    while (e > b && text::is_space(text[e - 1])) --e;
    if (e > b) out.push_back({b, e, std::string(text.substr(b, e - b))});
}

}  // namespace narrative_detail

/// Sentence-level clauses. Boundaries fall after runs of terminal
/// punctuation followed by whitespace (common abbreviations excepted) and
/// at newlines.
inline std::vector<Clause> segment_narrative(std::string_view text) {
    std::vector<Clause> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            narrative_detail::push_clause(text, start, i, out);
            start = ++i;
            continue;
        }
        if (c == '.' || c == '!' || c == '?') {
            std::size_t j = i;
            while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
            while (j < text.size() && (text[j] == '"' || text[j] == '\'' || text[j] == ')')) ++j;
            const bool at_break = j == text.size() || text::is_space(text[j]);
            if (at_break && !(c == '.' && j == i + 1 && narrative_detail::is_abbreviation(text, i))) {
                narrative_detail::push_clause(text, start, j, out);
                start = i = j;
                continue;
            }
            i = j;
            continue;
        }
        ++i;
    }
    narrative_detail::push_clause(text, start, text.size(), out);
    return out;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Highest priority first.
inline constexpr std::array<Designation, 8> kDesignationPriority = {
    Designation::Diagnosis, Designation::Procedure, Designation::Test,    Designation::Medication,
    Designation::Treatment, Designation::Provider,  Designation::Symptom, Designation::LifeEvent,
};

inline std::size_t designation_rank(Designation d) {
    return static_cast<std::size_t>(std::find(kDesignationPriority.begin(), kDesignationPriority.end(), d) -
                                    kDesignationPriority.begin());
}

namespace narrative_detail {

inline bool keyword_at(const std::vector<text::Token>& tokens, std::size_t at, const NarrativeLexicon::Keyword& kw) {
    const auto& p = kw.tokens;
    if (p.empty() || at + p.size() > tokens.size()) return false;
    for (std::size_t k = 0; k + 1 < p.size(); ++k)
        if (tokens[at + k].text != p[k]) return false;
    const std::string& last = tokens[at + p.size() - 1].text;
    return kw.stem ? last.rfind(p.back(), 0) == 0 : last == p.back();
}

inline std::set<Designation> designation_hits(const std::vector<text::Token>& tokens, const NarrativeLexicon& lex) {
    std::set<Designation> hits;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        for (const auto& rule : lex.designations)
            if (keyword_at(tokens, i, rule.keyword)) hits.insert(rule.designation);
    return hits;
}

inline std::optional<Designation> best(const std::set<Designation>& hits) {
    std::optional<Designation> out;
    for (Designation d : hits)
        if (!out || designation_rank(d) < designation_rank(*out)) out = d;
    return out;
}

}  // namespace narrative_detail

inline std::optional<Designation> classify_designation(std::string_view clause,
                                                       const NarrativeLexicon& lex = NarrativeLexicon::builtin()) {
    return narrative_detail::best(narrative_detail::designation_hits(text::tokenize(clause), lex));
}

/// Lowercase word with surrounding punctuation removed; empty for pure
/// punctuation.
inline std::string normalize_word(std::string_view word) {
    std::size_t b = 0, e = word.size();
    auto alnum = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               static_cast<unsigned char>(c) >= 0x80;
    };
    while (b < e && !alnum(word[b])) ++b;
    while (e > b && !alnum(word[e - 1])) --e;
    return text::to_lower(word.substr(b, e - b));
}

inline std::vector<std::string> content_words(std::string_view s, const NarrativeLexicon& lex) {
    std::vector<std::string> out;
    for (const auto& t : text::tokenize(s)) {
        if (t.kind == text::TokenKind::Punct) continue;
        std::string w = normalize_word(t.text);
        if (!w.empty() && !lex.stopwords.count(w)) out.push_back(std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Event extraction
// ---------------------------------------------------------------------------

namespace narrative_detail {

struct Piece {
    std::size_t begin;  // offsets into the clause text
    std::size_t end;
};

struct WordSpan {
    std::size_t begin;
    std::size_t end;
    std::string norm;
};

inline std::vector<WordSpan> words_of(std::string_view s) {
    std::vector<WordSpan> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && text::is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !text::is_space(s[j])) ++j;
        if (j > i) out.push_back({i, j, normalize_word(s.substr(i, j - i))});
        i = j;
    }
    return out;
}

/// Splits a clause carrying several designations at coordinating
/// conjunctions. Pieces without a designation are folded into the following
/// piece (or the preceding one at the end).
inline std::vector<Piece> split_clause(std::string_view clause, const NarrativeLexicon& lex) {
    const auto tokens = text::tokenize(clause);
    if (designation_hits(tokens, lex).size() < 2) return {{0, clause.size()}};

    std::vector<std::size_t> cuts{0};
    for (std::size_t i = 1; i < tokens.size(); ++i)
        if (lex.conjunctions.count(tokens[i].text)) cuts.push_back(tokens[i].text == ";" ? tokens[i].end : tokens[i].begin);
    cuts.push_back(clause.size());

    std::vector<Piece> raw;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        if (cuts[k + 1] > cuts[k]) raw.push_back({cuts[k], cuts[k + 1]});

    std::vector<Piece> merged;
    std::optional<std::size_t> carry;
    for (const Piece& p : raw) {
        const std::size_t begin = carry.value_or(p.begin);
        const bool hit = !designation_hits(text::tokenize(clause.substr(p.begin, p.end - p.begin)), lex).empty();
        if (!hit) {
            carry = begin;
            continue;
        }
        merged.push_back({begin, p.end});
        carry.reset();
    }
    if (carry) {
        if (merged.empty()) return {{0, clause.size()}};
        merged.back().end = clause.size();
    }
    if (merged.size() < 2) return {{0, clause.size()}};
    return merged;
}

inline std::string_view strip_edges(std::string_view s, std::string_view chars) {
    s = text::trim(s);
    while (!s.empty() && chars.find(s.front()) != std::string_view::npos) s = text::trim(s.substr(1));
    while (!s.empty() && chars.find(s.back()) != std::string_view::npos) s = text::trim(s.substr(0, s.size() - 1));
    return s;
}

struct TitleSplit {
    std::string title;
    std::string notes;
};

/// Title: the clause head after leading first-person phrases, up to the
/// eighth content word. Notes: whatever follows the title.
inline TitleSplit split_title(std::string_view piece, const NarrativeLexicon& lex) {
    constexpr std::size_t kTitleContentWords = 8;
    auto words = words_of(piece);
    std::size_t first = 0;
    for (bool stripped = true; stripped && first < words.size();) {
        stripped = false;
        for (const auto& phrase : lex.lead_phrases) {
            if (first + phrase.size() >= words.size()) continue;  // keep at least one word
            bool match = true;
            for (std::size_t k = 0; k < phrase.size() && match; ++k) match = words[first + k].norm == phrase[k];
            if (match) {
                first += phrase.size();
                stripped = true;
                break;
            }
        }
    }
    std::size_t last = first;
    std::size_t content = 0;
    while (last < words.size() && content < kTitleContentWords) {
        const std::string& w = words[last].norm;
        if (!w.empty() && !lex.stopwords.count(w)) ++content;
        ++last;
    }
    if (first >= words.size()) return {std::string(strip_edges(piece, ".,;:!? ")), ""};

    std::string title(strip_edges(piece.substr(words[first].begin, words[last - 1].end - words[first].begin), ".,;:!?"));
    if (!title.empty() && title[0] >= 'a' && title[0] <= 'z') title[0] = static_cast<char>(title[0] - 'a' + 'A');
    std::string notes;
    if (last < words.size()) notes = std::string(strip_edges(piece.substr(words[last].begin), ",;:."));
    return {std::move(title), std::move(notes)};
}

inline std::pair<TimeValue, TimeValue> times_from(const std::vector<TemporalMention>& mentions) {
    for (std::size_t k = 0; k + 1 < mentions.size(); ++k)
        if (mentions[k].role == RangeRole::RangeStart && mentions[k + 1].role == RangeRole::RangeEnd)
            return {mentions[k].value, mentions[k + 1].value};
    std::optional<TimeValue> start;
    bool ongoing = false;
    for (const auto& m : mentions) {
        if (m.role != RangeRole::Point) continue;
        if (m.value.kind() == TimeKind::Current) ongoing = true;
        else if (!start) start = m.value;
    }
    if (start) return {*start, ongoing ? TimeValue::current() : TimeValue::unspecified()};
    if (ongoing) return {TimeValue::current(), TimeValue::unspecified()};
    return {TimeValue::unspecified(), TimeValue::unspecified()};
}

inline std::pair<std::string, std::optional<std::string>> concern_of(std::string_view piece,
                                                                     const NarrativeLexicon& lex) {
    const auto tokens = text::tokenize(piece);
    const NarrativeLexicon::ConcernRule* found = nullptr;
    for (std::size_t i = 0; i < tokens.size() && !found; ++i) {
        for (const auto& rule : lex.concerns) {
            if (!keyword_at(tokens, i, rule.keyword)) continue;
            if (!found || rule.keyword.tokens.size() > found->keyword.tokens.size()) found = &rule;
        }
    }
    if (!found) return {std::string(kOtherConcern), std::nullopt};
    return {found->specific, found->broad};
}

}  // namespace narrative_detail

/// Rule-based extraction: one Event per designation-bearing clause (or
/// clause piece), ids `e1`, `e2`, ... in narrative order.
inline std::vector<Event> extract_events(std::string_view narrative, const Profile& profile,
                                         const ParserConfig& config = {}) {
    using namespace narrative_detail;
    const NarrativeLexicon& lex = *config.narrative;
    const CalendarDate reference = config.reference();
    std::vector<Event> events;
    for (const Clause& clause : segment_narrative(narrative)) {
        for (const Piece& piece : split_clause(clause.text, lex)) {
            const std::string_view body =
                strip_edges(std::string_view(clause.text).substr(piece.begin, piece.end - piece.begin), ",;");
            auto designation = classify_designation(body, lex);
            if (!designation) continue;

            Event e;
            e.narrative_index = events.size();
            e.id = "e" + std::to_string(events.size() + 1);
            e.designation = *designation;
            auto split = split_title(body, lex);
            e.title = std::move(split.title);
            e.notes = std::move(split.notes);
            if (e.designation == Designation::LifeEvent) {
                e.specific_concern = std::string(kLifeConcern);
            } else {
                auto [specific, broad] = concern_of(body, lex);
                e.specific_concern = std::move(specific);
                e.broad_concern = std::move(broad);
            }
            auto [start, end] = times_from(parse_time_expression(body, profile.date_of_birth, reference, *config.temporal));
            e.start = std::move(start);
            e.end = std::move(end);
            events.push_back(std::move(e));
        }
    }
    return events;
}

// ---------------------------------------------------------------------------
// Remote parsing
// ---------------------------------------------------------------------------

/// Transport to a remote model that performs the same transformation as
/// extract_events. Implementations throw RemoteUnavailableError on transport
/// failure and return the raw response body otherwise.
class RemoteParserClient {
public:
    virtual ~RemoteParserClient() = default;
    virtual std::string post(const std::string& request_body) = 0;
};

struct RemoteParseResult {
    std::vector<Event> events;
    ValidationReport rejected;              // violations of dropped events
    std::vector<std::string> not_grounded;  // ids of kept events whose title is not in the text
};

inline std::string parser_prompt() { return std::string(embedded::kParserPrompt); }

/// Value of the `prompt-version:` line of the bundled prompt.
inline std::string parser_prompt_version() {
    const std::string_view prompt = embedded::kParserPrompt;
    constexpr std::string_view key = "prompt-version:";
    const auto at = prompt.find(key);
    if (at == std::string_view::npos) return "";
    const auto eol = prompt.find('\n', at);
    return std::string(text::trim(prompt.substr(at + key.size(), eol - at - key.size())));
}

inline std::string remote_request_body(std::string_view narrative, const Profile& profile) {
    Json j;
    j["narrative"] = std::string(narrative);
    j["dateOfBirth"] = profile.date_of_birth ? Json(format_iso(*profile.date_of_birth)) : Json(nullptr);
    return j.dump();
}

/// Sends the whole narrative in one request, validates the returned events
/// and checks that each title only uses words found in the narrative.
inline RemoteParseResult remote_parse(std::string_view narrative, const Profile& profile, RemoteParserClient& client,
                                      const NarrativeLexicon& lex = NarrativeLexicon::builtin()) {
    const std::string body = client.post(remote_request_body(narrative, profile));
    Json response;
    try {
        response = Json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw RemoteProtocolError(std::string("remote parser returned invalid JSON: ") + e.what());
    }
    if (!response.is_object() || !response.contains("events"))
        throw RemoteProtocolError("remote parser response lacks an events array");

    HealthStory story;
    story.name = profile.name;
    story.date_of_birth = profile.date_of_birth;
    std::vector<Event> events;
    try {
        events = events_from_json(response["events"], "$.events");
    } catch (const SchemaError& e) {
        throw RemoteProtocolError(std::string("remote parser response violates the event schema: ") + e.what());
    }

    RemoteParseResult result;
    std::set<std::string> ids;
    for (Event& e : events) {
        if (!ids.insert(e.id).second) {
            result.rejected.push_back({e.id, Rule::DuplicateId, "dropped later occurrence"});
            continue;
        }
        // The wire format carries no ordering key beyond array position.
        e.narrative_index = story.events.size();
        story.events.push_back(std::move(e));
    }
    if (story.date_of_birth) story = resolve_relative_dates(std::move(story));

    std::set<std::string> dropped;
    for (const Violation& v : validate_story(story)) {
        // Soft rules: these never block the flow.
        if (v.rule == Rule::BeforeBirth || v.rule == Rule::UnresolvedRelativeDate) continue;
        dropped.insert(v.event_id);
        result.rejected.push_back(v);
    }

    std::set<std::string> source_words;
    for (const auto& t : text::tokenize(narrative))
        if (t.kind != text::TokenKind::Punct) source_words.insert(normalize_word(t.text));

    for (Event& e : story.events) {
        if (dropped.count(e.id)) continue;
        for (const std::string& w : content_words(e.title, lex)) {
            if (!source_words.count(w)) {
                result.not_grounded.push_back(e.id);
                break;
            }
        }
        result.events.push_back(std::move(e));
    }
    return result;
}

struct ParseOutcome {
    std::vector<Event> events;
    ValidationReport rejected;
    std::vector<std::string> not_grounded;
    bool used_fallback = false;
};

/// Runs the parser selected by `config.mode`. `client` may be null only in
/// rule-based mode.
inline ParseOutcome parse_narrative(std::string_view narrative, const Profile& profile, const ParserConfig& config,
                                    RemoteParserClient* client) {
    ParseOutcome out;
    if (config.mode == ParserMode::RuleBased) {
        out.events = extract_events(narrative, profile, config);
        return out;
    }
    if (!client) {
        if (config.mode == ParserMode::Remote) throw RemoteUnavailableError("no remote parser configured");
        out.events = extract_events(narrative, profile, config);
        out.used_fallback = true;
        return out;
    }
    try {
        auto r = remote_parse(narrative, profile, *client, *config.narrative);
        out.events = std::move(r.events);
        out.rejected = std::move(r.rejected);
        out.not_grounded = std::move(r.not_grounded);
    } catch (const RemoteUnavailableError&) {
        if (config.mode == ParserMode::Remote) throw;
        out.events = extract_events(narrative, profile, config);
        out.used_fallback = true;
    }
    return out;
}

}  // namespace storyline
