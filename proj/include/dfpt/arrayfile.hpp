// arrayfile.hpp - self-describing binary container of named double-precision arrays
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dfpt/model.hpp"

namespace dfpt {

/// Named real/complex matrices and strings, written as raw little-endian
/// doubles so files round-trip bit-exactly. Format version is embedded.
class ArrayFile {
public:
    static constexpr std::uint32_t format_version = 1;

    void set(const std::string& name, const RMat& m);
    void set(const std::string& name, const Mat& m);
    void set_scalar(const std::string& name, double v);
    void set_string(const std::string& name, const std::string& v);

    bool has(const std::string& name) const;
    RMat get_real(const std::string& name) const;
    Mat get_complex(const std::string& name) const;
    double get_scalar(const std::string& name) const;
    std::string get_string(const std::string& name) const;

    void save(const std::string& path) const;
    static ArrayFile load(const std::string& path);

private:
    struct Entry {
        std::uint8_t dtype = 0;  // 0 real, 1 complex, 2 string
        std::uint64_t rows = 0, cols = 0;
        std::string bytes;
    };
    std::map<std::string, Entry> entries_;
};

}  // namespace dfpt
