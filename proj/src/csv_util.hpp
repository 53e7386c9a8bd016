#pragma once

#include "moistcol/types.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace moistcol::detail {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file: " + path);
    CsvTable table;
    std::string line;
    bool haveHeader = false;
    while (std::getline(in, line)) {
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (!haveHeader) {
            table.header = std::move(cells);
            haveHeader = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw ConfigError(path + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    if (!haveHeader) throw ConfigError(path + ": empty CSV");
    return table;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(context + ": not a number: '" + s + "'");
    }
}

inline long parse_int(const std::string& s, const std::string& context) {
    long v = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError(context + ": not an integer: '" + s + "'");
    return v;
}

}  // namespace moistcol::detail
