#include "dfpt/arrayfile.hpp"

#include <cstring>
#include <fstream>

namespace dfpt {

namespace {
constexpr char magic[8] = {'D', 'F', 'P', 'T', 'A', 'R', 'R', '1'};

template <class T>
void put(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size())
        throw std::runtime_error("ArrayFile: truncated file");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}
}  // namespace

void ArrayFile::set(const std::string& name, const RMat& m) {
    Entry e;
    e.dtype = 0;
    e.rows = static_cast<std::uint64_t>(m.rows());
    e.cols = static_cast<std::uint64_t>(m.cols());
    e.bytes.assign(reinterpret_cast<const char*>(m.data()),
                   sizeof(double) * m.size());
    entries_[name] = std::move(e);
}

void ArrayFile::set(const std::string& name, const Mat& m) {
    Entry e;
    e.dtype = 1;
    e.rows = static_cast<std::uint64_t>(m.rows());
    e.cols = static_cast<std::uint64_t>(m.cols());
    e.bytes.assign(reinterpret_cast<const char*>(m.data()),
                   sizeof(Complex) * m.size());
    entries_[name] = std::move(e);
}

void ArrayFile::set_scalar(const std::string& name, double v) {
    RMat m(1, 1);
    m(0, 0) = v;
    set(name, m);
}

void ArrayFile::set_string(const std::string& name, const std::string& v) {
    Entry e;
    e.dtype = 2;
    e.rows = v.size();
    e.cols = 1;
    e.bytes = v;
    entries_[name] = std::move(e);
}

bool ArrayFile::has(const std::string& name) const { return entries_.count(name) > 0; }

RMat ArrayFile::get_real(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.dtype != 0)
        throw std::runtime_error("ArrayFile: missing real entry '" + name + "'");
    RMat m(it->second.rows, it->second.cols);
    std::memcpy(m.data(), it->second.bytes.data(), it->second.bytes.size());
    return m;
}

Mat ArrayFile::get_complex(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.dtype != 1)
        throw std::runtime_error("ArrayFile: missing complex entry '" + name + "'");
    Mat m(it->second.rows, it->second.cols);
    std::memcpy(m.data(), it->second.bytes.data(), it->second.bytes.size());
    return m;
}

double ArrayFile::get_scalar(const std::string& name) const {
    RMat m = get_real(name);
    if (m.size() != 1) throw std::runtime_error("ArrayFile: '" + name + "' is not scalar");
    return m(0, 0);
}

std::string ArrayFile::get_string(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second.dtype != 2)
        throw std::runtime_error("ArrayFile: missing string entry '" + name + "'");
    return it->second.bytes;
}

void ArrayFile::save(const std::string& path) const {
    std::string out;
    out.append(magic, sizeof(magic));
    put<std::uint32_t>(out, format_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.append(name);
        put<std::uint8_t>(out, e.dtype);
        put<std::uint64_t>(out, e.rows);
        put<std::uint64_t>(out, e.cols);
        out.append(e.bytes);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("ArrayFile: cannot write '" + path + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("ArrayFile: write failed for '" + path + "'");
}

ArrayFile ArrayFile::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ArrayFile: cannot open '" + path + "'");
    std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    if (in.size() < sizeof(magic) || std::memcmp(in.data(), magic, sizeof(magic)) != 0)
        throw std::runtime_error("ArrayFile: bad magic in '" + path + "'");
    pos = sizeof(magic);
    auto version = take<std::uint32_t>(in, pos);
    if (version != format_version)
        throw std::runtime_error("ArrayFile: unsupported format version");
    auto count = take<std::uint32_t>(in, pos);
    ArrayFile out;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name_len = take<std::uint32_t>(in, pos);
        if (pos + name_len > in.size()) throw std::runtime_error("ArrayFile: truncated");
        std::string name = in.substr(pos, name_len);
        pos += name_len;
        Entry e;
        e.dtype = take<std::uint8_t>(in, pos);
        e.rows = take<std::uint64_t>(in, pos);
        e.cols = take<std::uint64_t>(in, pos);
        std::size_t payload = e.dtype == 2 ? e.rows
                              : e.rows * e.cols * (e.dtype == 1 ? sizeof(Complex)
                                                                : sizeof(double));
        if (pos + payload > in.size()) throw std::runtime_error("ArrayFile: truncated");
        e.bytes = in.substr(pos, payload);
        pos += payload;
        out.entries_[name] = std::move(e);
    }
    return out;
}

}  // namespace dfpt
