#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace storyline::text {

inline char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

/// ASCII lowercase; byte offsets are preserved.
inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = lower(c);
    return out;
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

enum class TokenKind { Word, Number, Punct };

struct Token {
    std::size_t begin = 0;
    std::size_t end = 0;
    TokenKind kind = TokenKind::Word;
    std::string text;  // lowercase

    bool is(std::string_view s) const { return text == s; }
};

namespace detail {

inline bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '\'' || c >= 0x80;
}

// En dash and em dash, the only multi-byte punctuation the lexicons use.
inline std::size_t dash_length(std::string_view s, std::size_t i) {
    if (i + 2 < s.size() + 0 && static_cast<unsigned char>(s[i]) == 0xE2 &&
        static_cast<unsigned char>(s[i + 1]) == 0x80) {
        auto c = static_cast<unsigned char>(s[i + 2]);
        if (c == 0x93 || c == 0x94) return 3;
    }
    return 0;
}

}  // namespace detail

/// Splits text into words (alphanumeric runs with apostrophes), numbers
/// (pure digit runs) and single punctuation marks. Whitespace is dropped.
inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (is_space(static_cast<char>(c))) {
            ++i;
            continue;
        }
        if (std::size_t n = detail::dash_length(s, i)) {
            tokens.push_back({i, i + n, TokenKind::Punct, std::string(s.substr(i, n))});
            i += n;
            continue;
        }
        if (detail::is_word_byte(c)) {
            std::size_t j = i;
            bool digits = true;
            while (j < s.size() && detail::is_word_byte(static_cast<unsigned char>(s[j])) && !detail::dash_length(s, j)) {
                if (s[j] < '0' || s[j] > '9') digits = false;
                ++j;
            }
            // Trailing apostrophes belong to quoting, not the word.
            std::size_t k = j;
            while (k > i + 1 && s[k - 1] == '\'') --k;
            if (k > i && s[i] == '\'') {
                tokens.push_back({i, i + 1, TokenKind::Punct, "'"});
                i += 1;
                continue;
            }
            tokens.push_back({i, k, digits ? TokenKind::Number : TokenKind::Word, to_lower(s.substr(i, k - i))});
            i = k;
            continue;
        }
        tokens.push_back({i, i + 1, TokenKind::Punct, std::string(1, static_cast<char>(c))});
        ++i;
    }
    return tokens;
}

/// Lowercase token texts of a lexicon pattern.
inline std::vector<std::string> pattern_tokens(std::string_view pattern) {
    std::vector<std::string> out;
    for (auto& t : tokenize(pattern)) out.push_back(std::move(t.text));
    return out;
}

/// True when tokens[at..] spell out `pattern` exactly.
inline bool matches_at(const std::vector<Token>& tokens, std::size_t at, const std::vector<std::string>& pattern) {
    if (pattern.empty() || at + pattern.size() > tokens.size()) return false;
    for (std::size_t k = 0; k < pattern.size(); ++k)
        if (tokens[at + k].text != pattern[k]) return false;
    return true;
}

/// Number of display characters (UTF-8 continuation bytes not counted).
inline std::size_t display_length(std::string_view s) {
    std::size_t n = 0;
    for (char c : s)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

/// Greedy word wrap to at most `max_chars` per line. Words longer than a
/// line are kept whole on their own line.
inline std::vector<std::string> wrap(std::string_view s, std::size_t max_chars) {
    std::vector<std::string> lines;
    std::string line;
    std::size_t line_chars = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (j == i) break;
        std::string_view word = s.substr(i, j - i);
        const std::size_t word_chars = display_length(word);
        if (!line.empty() && line_chars + 1 + word_chars > max_chars) {
            lines.push_back(std::move(line));
            line.clear();
            line_chars = 0;
        }
        if (!line.empty()) {
            line += ' ';
            ++line_chars;
        }
        line += word;
        line_chars += word_chars;
        i = j;
    }
    if (!line.empty()) lines.push_back(std::move(line));
    return lines;
}

}  // namespace storyline::text
