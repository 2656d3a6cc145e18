#pragma once

// Minimal TOML-subset reader for run configs: [table] and [[array-of-table]]
// headers, key = value lines with strings, numbers, booleans, and flat
// numeric arrays. Keys are flattened to dotted paths.

#include <cctype>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "omsim/errors.hpp"

namespace omsim::toml {

struct Value {
    std::variant<std::string, double, bool, std::vector<double>> data;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_number() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<std::vector<double>>(data); }

    const std::string& as_string() const { return std::get<std::string>(data); }
    double as_number() const { return std::get<double>(data); }
    bool as_bool() const { return std::get<bool>(data); }
    const std::vector<double>& as_array() const { return std::get<std::vector<double>>(data); }
};

using Table = std::map<std::string, Value>;

struct Document {
    Table root;                                   // dotted-path -> value
    std::map<std::string, std::vector<Table>> table_arrays; // [[path]] entries
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline Value parse_value(const std::string& raw, int line_no) {
    const std::string text = trim(raw);
    if (text.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty value");
    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"')
            throw ValidationError("config line " + std::to_string(line_no) + ": unterminated string");
        return {text.substr(1, text.size() - 2)};
    }
    if (text == "true") return {true};
    if (text == "false") return {false};
    if (text.front() == '[') {
        if (text.back() != ']')
            throw ValidationError("config line " + std::to_string(line_no) + ": unterminated array");
        std::vector<double> values;
        std::string body = text.substr(1, text.size() - 2);
        std::size_t pos = 0;
        while (pos < body.size()) {
            std::size_t comma = body.find(',', pos);
            if (comma == std::string::npos) comma = body.size();
            const std::string item = trim(body.substr(pos, comma - pos));
            if (!item.empty()) {
                try {
                    values.push_back(std::stod(item));
                } catch (const std::exception&) {
                    throw ValidationError("config line " + std::to_string(line_no) +
                                          ": non-numeric array element '" + item + "'");
                }
            }
            pos = comma + 1;
        }
        return {values};
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return {v};
    } catch (const std::exception&) {
    }
    throw ValidationError("config line " + std::to_string(line_no) + ": cannot parse value '" +
                          text + "'");
}

} // namespace detail

inline Document parse(const std::string& content) {
    Document doc;
    std::string prefix;
    Table* active_array_table = nullptr;

    std::size_t start = 0;
    int line_no = 0;
    while (start <= content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        ++line_no;
        std::string line = detail::trim(detail::strip_comment(content.substr(start, end - start)));
        start = end + 1;
        if (line.empty()) continue;

        if (line.size() >= 4 && line.substr(0, 2) == "[[" &&
            line.substr(line.size() - 2) == "]]") {
            const std::string path = detail::trim(line.substr(2, line.size() - 4));
            doc.table_arrays[path].emplace_back();
            active_array_table = &doc.table_arrays[path].back();
            prefix.clear();
            continue;
        }
        if (line.front() == '[' && line.back() == ']') {
            prefix = detail::trim(line.substr(1, line.size() - 2));
            active_array_table = nullptr;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const Value value = detail::parse_value(line.substr(eq + 1), line_no);
        if (active_array_table) {
            (*active_array_table)[key] = value;
        } else {
            doc.root[prefix.empty() ? key : prefix + "." + key] = value;
        }
    }
    return doc;
}

} // namespace omsim::toml
