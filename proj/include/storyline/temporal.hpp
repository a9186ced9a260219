#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "calendar.hpp"
#include "embedded_data.hpp"
#include "lexicon.hpp"
#include "model.hpp"
#include "text.hpp"

namespace storyline {

enum class RangeRole { Point, RangeStart, RangeEnd };

inline constexpr std::string_view to_string(RangeRole r) {
    switch (r) {
        case RangeRole::Point: return "point";
        case RangeRole::RangeStart: return "range-start";
        case RangeRole::RangeEnd: return "range-end";
    }
    return "";
}

/// A time value found in text, with the byte span it came from.
struct TemporalMention {
    std::size_t begin = 0;
    std::size_t end = 0;
    TimeValue value;
    RangeRole role = RangeRole::Point;

    bool operator==(const TemporalMention&) const = default;
};

/// Vocabulary for temporal expressions. The grammar (how numbers, months and
/// cues combine) is fixed in code; the words come from the lexicon file.
struct TemporalLexicon {
    using Phrase = std::vector<std::string>;

    std::string version;
    std::vector<std::pair<Phrase, TimeKind>> markers;
    std::vector<Phrase> age_cues;
    std::vector<Phrase> since_words;
    std::vector<Phrase> range_openers;
    std::vector<Phrase> between_openers;
    std::vector<Phrase> range_connectors;
    std::vector<Phrase> between_connectors;
    std::map<std::string, char> offset_units;  // 'y' or 'm'
    std::set<std::string> quantity_units;
    std::map<std::string, unsigned> months;
    std::map<std::string, int> numbers;

    static TemporalLexicon from_table(const LexiconTable& table) {
        TemporalLexicon lex;
        lex.version = table.version;
        auto fail = [](const LexiconRule& r, const std::string& why) {
            return Error("temporal lexicon line " + std::to_string(r.line) + ": " + why);
        };
        for (const LexiconRule& r : table.rules) {
            Phrase phrase = text::pattern_tokens(r.pattern);
            if (r.kind == "marker") {
                if (r.variant == "current") lex.markers.emplace_back(phrase, TimeKind::Current);
                else if (r.variant == "early") lex.markers.emplace_back(phrase, TimeKind::Early);
                else throw fail(r, "marker variant must be current or early");
            } else if (r.kind == "age-cue") {
                lex.age_cues.push_back(phrase);
            } else if (r.kind == "range-open") {
                if (r.variant == "current") lex.since_words.push_back(phrase);
                else if (r.variant == "between") lex.between_openers.push_back(phrase);
                else lex.range_openers.push_back(phrase);
            } else if (r.kind == "range-close") {
                (r.variant == "between" ? lex.between_connectors : lex.range_connectors).push_back(phrase);
            } else if (r.kind == "offset-unit") {
                if (r.variant != "year" && r.variant != "month") throw fail(r, "offset unit must be year or month");
                lex.offset_units[r.pattern] = r.variant[0] == 'y' ? 'y' : 'm';
            } else if (r.kind == "unit") {
                lex.quantity_units.insert(r.pattern);
            } else if (r.kind == "month") {
                lex.months[r.pattern] = static_cast<unsigned>(std::stoul(r.variant));
            } else if (r.kind == "number") {
                lex.numbers[r.pattern] = std::stoi(r.variant);
            } else {
                throw fail(r, "unknown pattern kind '" + r.kind + "'");
            }
        }
        // Longest phrase first so "when i was young" beats shorter overlaps.
        std::stable_sort(lex.markers.begin(), lex.markers.end(),
                         [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
        std::stable_sort(lex.age_cues.begin(), lex.age_cues.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        return lex;
    }

    static TemporalLexicon from_text(std::string_view tsv) { return from_table(parse_lexicon(tsv)); }

    static const TemporalLexicon& builtin() {
        static const TemporalLexicon lex = from_text(embedded::kTemporalLexicon);
        return lex;
    }
};

namespace temporal_detail {

using text::Token;
using text::TokenKind;

struct Atom {
    std::size_t first = 0;  // token range [first, last)
    std::size_t last = 0;
    TimeValue value;
    bool marker = false;
};

struct Scanner {
    const std::vector<Token>& tokens;
    const TemporalLexicon& lex;
    const std::optional<CalendarDate>& dob;
    const CalendarDate& reference;

    std::size_t size() const { return tokens.size(); }

    bool adjacent(std::size_t i) const { return i + 1 < tokens.size() && tokens[i].end == tokens[i + 1].begin; }

    bool punct(std::size_t i, std::string_view p) const {
        return i < tokens.size() && tokens[i].kind == TokenKind::Punct && tokens[i].text == p;
    }

    std::optional<int> number_token(std::size_t i, std::size_t min_digits, std::size_t max_digits) const {
        if (i >= tokens.size() || tokens[i].kind != TokenKind::Number) return std::nullopt;
        const std::string& t = tokens[i].text;
        if (t.size() < min_digits || t.size() > max_digits) return std::nullopt;
        return std::stoi(t);
    }

    std::optional<unsigned> month_word(std::size_t i) const {
        if (i >= tokens.size()) return std::nullopt;
        auto it = lex.months.find(tokens[i].text);
        if (it == lex.months.end()) return std::nullopt;
        return it->second;
    }

    /// Day of month, "15" or "15th".
    std::optional<unsigned> day_number(std::size_t i) const {
        if (i >= tokens.size()) return std::nullopt;
        const std::string& t = tokens[i].text;
        std::size_t digits = 0;
        while (digits < t.size() && t[digits] >= '0' && t[digits] <= '9') ++digits;
        if (digits == 0 || digits > 2) return std::nullopt;
        std::string_view suffix = std::string_view(t).substr(digits);
        if (!suffix.empty() && suffix != "st" && suffix != "nd" && suffix != "rd" && suffix != "th") return std::nullopt;
        unsigned d = static_cast<unsigned>(std::stoi(t.substr(0, digits)));
        if (d < 1 || d > 31) return std::nullopt;
        return d;
    }

    /// Count expressed as digits, a number word, or tens + ones words
    /// ("twenty five", "twenty-five"). Returns (value, tokens consumed).
    std::optional<std::pair<int, std::size_t>> count(std::size_t i, std::size_t max_digits) const {
        if (auto n = number_token(i, 1, max_digits)) return std::pair{*n, std::size_t{1}};
        if (i >= tokens.size()) return std::nullopt;
        auto it = lex.numbers.find(tokens[i].text);
        if (it == lex.numbers.end()) return std::nullopt;
        int value = it->second;
        std::size_t used = 1;
        if (value >= 20 && value % 10 == 0) {
            std::size_t j = i + 1;
            if (punct(j, "-")) ++j;
            if (j < tokens.size()) {
                auto ones = lex.numbers.find(tokens[j].text);
                if (ones != lex.numbers.end() && ones->second >= 1 && ones->second <= 9) {
                    value += ones->second;
                    used = j - i + 1;
                }
            }
        }
        return std::pair{value, used};
    }

    std::optional<std::size_t> phrase_at(std::size_t i, const std::vector<TemporalLexicon::Phrase>& phrases) const {
        for (const auto& p : phrases)
            if (text::matches_at(tokens, i, p)) return p.size();
        return std::nullopt;
    }

    static std::optional<CalendarDate> valid(int y, unsigned m, unsigned d) {
        CalendarDate date = make_date(y, m, d);
        if (!date.ok()) return std::nullopt;
        return date;
    }

    static bool plausible_year(int y) { return y >= 1900 && y <= 2099; }

    // ---- recognizers, highest priority first ----

    std::optional<Atom> iso_date(std::size_t i) const {
        auto y = number_token(i, 4, 4);
        if (!y || !adjacent(i) || !punct(i + 1, "-") || !adjacent(i + 1)) return std::nullopt;
        auto m = number_token(i + 2, 1, 2);
        if (!m || !adjacent(i + 2) || !punct(i + 3, "-") || !adjacent(i + 3)) return std::nullopt;
        auto d = number_token(i + 4, 1, 2);
        if (!d) return std::nullopt;
        auto date = valid(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
        if (!date) return std::nullopt;
        return Atom{i, i + 5, TimeValue::absolute(*date, Precision::Day)};
    }

    std::optional<Atom> slash_date(std::size_t i) const {
        auto m = number_token(i, 1, 2);
        if (!m || !adjacent(i) || !punct(i + 1, "/") || !adjacent(i + 1)) return std::nullopt;
        auto d = number_token(i + 2, 1, 2);
        if (!d || !adjacent(i + 2) || !punct(i + 3, "/") || !adjacent(i + 3)) return std::nullopt;
        auto y = number_token(i + 4, 4, 4);
        if (!y) return std::nullopt;
        auto date = valid(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
        if (!date) return std::nullopt;
        return Atom{i, i + 5, TimeValue::absolute(*date, Precision::Day)};
    }

    std::optional<Atom> month_day_year(std::size_t i) const {
        auto m = month_word(i);
        if (!m) return std::nullopt;
        std::size_t j = i + 1;
        if (punct(j, ".")) ++j;
        auto d = day_number(j);
        if (!d) return std::nullopt;
        ++j;
        if (punct(j, ",")) ++j;
        auto y = number_token(j, 4, 4);
        if (!y) return std::nullopt;
        auto date = valid(*y, *m, *d);
        if (!date) return std::nullopt;
        return Atom{i, j + 1, TimeValue::absolute(*date, Precision::Day)};
    }

    std::optional<Atom> day_month_year(std::size_t i) const {
        auto d = day_number(i);
        if (!d) return std::nullopt;
        std::size_t j = i + 1;
        if (j < size() && tokens[j].is("of")) ++j;
        auto m = month_word(j);
        if (!m) return std::nullopt;
        ++j;
        if (punct(j, ",")) ++j;
        auto y = number_token(j, 4, 4);
        if (!y) return std::nullopt;
        auto date = valid(*y, *m, *d);
        if (!date) return std::nullopt;
        return Atom{i, j + 1, TimeValue::absolute(*date, Precision::Day)};
    }

    std::optional<Atom> month_year(std::size_t i) const {
        auto m = month_word(i);
        if (!m) return std::nullopt;
        std::size_t j = i + 1;
        if (j < size() && tokens[j].is("of")) ++j;
        else if (punct(j, ",")) ++j;
        auto y = number_token(j, 4, 4);
        if (!y || !plausible_year(*y)) return std::nullopt;
        return Atom{i, j + 1, TimeValue::absolute(make_date(*y, *m, 1), Precision::Month)};
    }

    std::optional<Atom> iso_month(std::size_t i) const {
        auto y = number_token(i, 4, 4);
        if (!y || !adjacent(i) || !punct(i + 1, "-") || !adjacent(i + 1)) return std::nullopt;
        auto m = number_token(i + 2, 2, 2);
        if (!m || *m < 1 || *m > 12) return std::nullopt;
        return Atom{i, i + 3, TimeValue::absolute(make_date(*y, static_cast<unsigned>(*m), 1), Precision::Month)};
    }

    std::optional<Atom> relative_age(std::size_t i) const {
        auto cue = phrase_at(i, lex.age_cues);
        if (!cue) return std::nullopt;
        std::size_t j = i + *cue;
        auto n = count(j, 3);
        if (!n || n->first > 130) return std::nullopt;
        j += n->second;
        // Absorb "years old" / "year old".
        if (j + 1 < size() && (tokens[j].is("years") || tokens[j].is("year")) && tokens[j + 1].is("old")) j += 2;
        return Atom{i, j, TimeValue::relative_age(n->first, dob)};
    }

    std::optional<Atom> offset(std::size_t i) const {
        std::optional<std::pair<int, std::size_t>> n;
        if (i < size() && (tokens[i].is("a") || tokens[i].is("an"))) n = std::pair{1, std::size_t{1}};
        else n = count(i, 3);
        if (!n) return std::nullopt;
        std::size_t j = i + n->second;
        if (j + 1 >= size()) return std::nullopt;
        auto unit = lex.offset_units.find(tokens[j].text);
        if (unit == lex.offset_units.end() || !tokens[j + 1].is("ago")) return std::nullopt;
        if (unit->second == 'y') {
            int y = static_cast<int>(reference.year()) - n->first;
            return Atom{i, j + 2, TimeValue::absolute(make_date(y, 1, 1), Precision::Year)};
        }
        CalendarDate shifted = add_months(reference, -n->first);
        CalendarDate first = make_date(static_cast<int>(shifted.year()), static_cast<unsigned>(shifted.month()), 1);
        return Atom{i, j + 2, TimeValue::absolute(first, Precision::Month)};
    }

    std::optional<Atom> year(std::size_t i) const {
        auto y = number_token(i, 4, 4);
        if (!y || !plausible_year(*y)) return std::nullopt;
        if (i + 1 < size() && lex.quantity_units.count(tokens[i + 1].text)) return std::nullopt;
        return Atom{i, i + 1, TimeValue::absolute(make_date(*y, 1, 1), Precision::Year)};
    }

    std::optional<Atom> marker(std::size_t i) const {
        for (const auto& [phrase, kind] : lex.markers) {
            if (!text::matches_at(tokens, i, phrase)) continue;
            TimeValue v = kind == TimeKind::Current ? TimeValue::current() : TimeValue::early();
            return Atom{i, i + phrase.size(), v, true};
        }
        return std::nullopt;
    }
};

}  // namespace temporal_detail

/// Extracts temporal mentions from one clause. Unrecognized text yields no
/// mentions; nothing is guessed. `dob` anchors relative ages (left unresolved
/// when absent) and `reference` anchors "N years ago".
inline std::vector<TemporalMention> parse_time_expression(std::string_view clause, std::optional<CalendarDate> dob,
                                                          const CalendarDate& reference,
                                                          const TemporalLexicon& lex = TemporalLexicon::builtin()) {
    using temporal_detail::Atom;
    using temporal_detail::Scanner;

    const auto tokens = text::tokenize(clause);
    const Scanner scan{tokens, lex, dob, reference};

    using Recognizer = std::optional<Atom> (Scanner::*)(std::size_t) const;
    static constexpr Recognizer kRecognizers[] = {
        &Scanner::iso_date,  &Scanner::slash_date,   &Scanner::month_day_year, &Scanner::day_month_year,
        &Scanner::month_year, &Scanner::iso_month,   &Scanner::relative_age,   &Scanner::offset,
        &Scanner::year,      &Scanner::marker,
    };

    std::vector<bool> taken(tokens.size(), false);
    std::vector<Atom> atoms;
    for (Recognizer rec : kRecognizers) {
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (taken[i]) continue;
            auto atom = (scan.*rec)(i);
            if (!atom) continue;
            bool free = true;
            for (std::size_t k = atom->first; k < atom->last; ++k) free = free && !taken[k];
            if (!free) continue;
            for (std::size_t k = atom->first; k < atom->last; ++k) taken[k] = true;
            atoms.push_back(*atom);
            i = atom->last - 1;
        }
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.first < b.first; });

    auto span = [&](std::size_t first, std::size_t last) {
        return std::pair{tokens[first].begin, tokens[last - 1].end};
    };
    auto mention = [&](const Atom& a, RangeRole role) {
        auto [b, e] = span(a.first, a.last);
        return TemporalMention{b, e, a.value, role};
    };
    auto preceded_by = [&](const Atom& a, const std::vector<TemporalLexicon::Phrase>& phrases) -> std::optional<std::size_t> {
        for (const auto& p : phrases)
            if (a.first >= p.size() && text::matches_at(tokens, a.first - p.size(), p)) return a.first - p.size();
        return std::nullopt;
    };

    struct Group {
        std::size_t order;
        std::vector<TemporalMention> mentions;
    };
    std::vector<Group> groups;
    std::vector<bool> used(atoms.size(), false);

    // Explicit ranges: "from A to B", "between A and B", "A-B".
    for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
        if (used[k]) continue;
        const Atom& a = atoms[k];
        const Atom& b = atoms[k + 1];
        if (a.value.kind() == TimeKind::Current || b.value.kind() == TimeKind::Early) continue;
        bool connected = false;
        for (const auto& c : lex.range_connectors)
            connected = connected || (b.first == a.last + c.size() && text::matches_at(tokens, a.last, c));
        if (!connected && preceded_by(a, lex.between_openers))
            for (const auto& c : lex.between_connectors)
                connected = connected || (b.first == a.last + c.size() && text::matches_at(tokens, a.last, c));
        if (!connected) continue;
        used[k] = used[k + 1] = true;
        groups.push_back({tokens[a.first].begin, {mention(a, RangeRole::RangeStart), mention(b, RangeRole::RangeEnd)}});
    }

    // Open ranges: "since A" continues to the present. The first later
    // ongoing marker becomes the range end; the rest are absorbed.
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (used[k] || atoms[k].value.kind() == TimeKind::Current) continue;
        auto since_at = preceded_by(atoms[k], lex.since_words);
        if (!since_at) continue;
        used[k] = true;
        TemporalMention end{tokens[*since_at].begin, tokens[atoms[k].first - 1].end, TimeValue::current(),
                            RangeRole::RangeEnd};
        bool have_end = false;
        for (std::size_t m = k + 1; m < atoms.size(); ++m) {
            if (used[m] || atoms[m].value.kind() != TimeKind::Current) continue;
            used[m] = true;
            if (!have_end) {
                end = mention(atoms[m], RangeRole::RangeEnd);
                have_end = true;
            }
        }
        groups.push_back({tokens[atoms[k].first].begin, {mention(atoms[k], RangeRole::RangeStart), end}});
    }

    for (std::size_t k = 0; k < atoms.size(); ++k)
        if (!used[k]) groups.push_back({tokens[atoms[k].first].begin, {mention(atoms[k], RangeRole::Point)}});

    std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.order < b.order; });
    std::vector<TemporalMention> out;
    for (auto& g : groups)
        for (auto& m : g.mentions) out.push_back(std::move(m));
    return out;
}

/// Compact one-line form used by corpus fixtures and the CLI, e.g.
/// `range-start:date(2019-01-01,year,absolute) ; range-end:current`.
inline std::string to_compact_string(const TimeValue& v) {
    switch (v.kind()) {
        case TimeKind::Unspecified: return "unspecified";
        case TimeKind::Early: return "early";
        case TimeKind::Current: return "current";
        case TimeKind::Date: break;
    }
    const DateValue& dv = v.date_value();
    std::string s = "date(";
    s += dv.date ? format_iso(*dv.date) : "?";
    s += dv.precision == Precision::Day ? ",day" : dv.precision == Precision::Month ? ",month" : ",year";
    s += dv.origin == DateOrigin::Absolute ? ",absolute" : ",relativeAge";
    if (dv.stated_age) s += "," + std::to_string(*dv.stated_age);
    return s + ")";
}

inline std::string to_compact_string(const std::vector<TemporalMention>& mentions) {
    if (mentions.empty()) return "-";
    std::string s;
    for (const auto& m : mentions) {
        if (!s.empty()) s += " ; ";
        s += std::string(to_string(m.role)) + ":" + to_compact_string(m.value);
    }
    return s;
}

}  // namespace storyline
