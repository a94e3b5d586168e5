#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hga/graph.hpp"
#include "hga/patterns.hpp"

namespace hga {

// Flat key=value config file; '#' comments; later flags override these values.
inline std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key=value, " + path + ":" + std::to_string(line_no));
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);
        kv[key] = value;
    }
    return kv;
}

// Declarative pattern file: one pattern per [name] section, one clause per
// line as `metric agg value`, e.g.
//   [boost]
//   clause = H avg 1
//   clause = D min 1
inline std::vector<PatternSpec> load_pattern_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<PatternSpec> specs;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto where = path + ":" + std::to_string(line_no);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            size_t close = line.find(']');
            if (close == std::string::npos) throw ParseError("unterminated section, " + where);
            specs.push_back({line.substr(1, close - 1), {}});
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos || line.substr(0, eq).find("clause") == std::string::npos)
            throw ParseError("expected 'clause = metric agg value', " + where);
        if (specs.empty()) throw ParseError("clause before any [pattern] section, " + where);
        std::istringstream body(line.substr(eq + 1));
        std::string metric, agg;
        int value;
        if (!(body >> metric >> agg >> value))
            throw ParseError("expected 'clause = metric agg value', " + where);
        PatternClause clause;
        if (metric == "H")
            clause.metric = MetricKind::H;
        else if (metric == "D")
            clause.metric = MetricKind::D;
        else
            throw ParseError("metric must be H or D, " + where);
        if (agg == "min")
            clause.agg = AggKind::Min;
        else if (agg == "max")
            clause.agg = AggKind::Max;
        else if (agg == "avg")
            clause.agg = AggKind::Avg;
        else
            throw ParseError("agg must be min, max, or avg, " + where);
        clause.required = value;
        specs.back().clauses.push_back(clause);
    }
    for (const auto& s : specs) s.validate();
    return specs;
}

} // namespace hga
