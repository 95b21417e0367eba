// csv.hpp - comma-separated tables with lossless double round-trips
#pragma once

#include <string>
#include <variant>
#include <vector>

namespace dfpt {

using CsvCell = std::variant<std::string, double, long>;

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<CsvCell>> rows;

    std::string write() const;
    void save(const std::string& path) const;
    /// Cells parse back as double/long when they read exactly as one;
    /// doubles are emitted with 17 significant digits so parse(write(x)) = x.
    static CsvTable parse(const std::string& text);
    static CsvTable load(const std::string& path);
};

std::string format_double(double v);

}  // namespace dfpt
