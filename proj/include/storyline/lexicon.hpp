#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace storyline {

/// One line of a tab-separated lexicon file.
struct LexiconRule {
    std::string kind;
    std::string pattern;
    std::string variant;
    std::size_t line = 0;
};

/// Parsed lexicon file. The `meta<TAB>version<TAB>N` line sets `version`.
struct LexiconTable {
    std::string version;
    std::vector<LexiconRule> rules;
};

/// Reads `pattern-kind <TAB> pattern <TAB> variant` lines. Blank lines and
/// lines starting with '#' are skipped; anything else with the wrong column
/// count is an error naming the line.
inline LexiconTable parse_lexicon(std::string_view text) {
    LexiconTable table;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string_view> cols;
        std::size_t pos = 0;
        while (true) {
            auto tab = line.find('\t', pos);
            cols.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
            if (tab == std::string_view::npos) break;
            pos = tab + 1;
        }
        if (cols.size() != 3 || cols[0].empty() || cols[1].empty())
            throw Error("lexicon line " + std::to_string(line_no) + ": expected 3 tab-separated columns");
        if (cols[0] == "meta") {
            if (cols[1] == "version") table.version = std::string(cols[2]);
            continue;
        }
        table.rules.push_back({std::string(cols[0]), std::string(cols[1]), std::string(cols[2]), line_no});
    }
    return table;
}

}  // namespace storyline
