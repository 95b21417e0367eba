#include "dfpt/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dfpt {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string cell_to_string(const CsvCell& c) {
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    if (std::holds_alternative<long>(c)) return std::to_string(std::get<long>(c));
    return format_double(std::get<double>(c));
}

CsvCell parse_cell(const std::string& s) {
    if (s.empty()) return s;
    {
        char* end = nullptr;
        long v = std::strtol(s.c_str(), &end, 10);
        if (end && *end == '\0' && end != s.c_str()) return v;
    }
    {
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (end && *end == '\0' && end != s.c_str()) return v;
    }
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string CsvTable::write() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << cell_to_string(row[i]);
        }
        out << '\n';
    }
    return out.str();
}

void CsvTable::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("CsvTable: cannot write '" + path + "'");
    f << write();
}

CsvTable CsvTable::parse(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.eof()) break;
        auto cells = split(line);
        if (first) {
            t.header = cells;
            first = false;
            continue;
        }
        std::vector<CsvCell> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_cell(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable CsvTable::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("CsvTable: cannot open '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse(buf.str());
}

}  // namespace dfpt
