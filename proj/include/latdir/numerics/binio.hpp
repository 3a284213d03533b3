#pragma once

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace latdir::detail {

// Raw little-endian scalar I/O; all artifact formats assume little-endian.

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error(std::string("truncated file while reading ") + what);
    return v;
}

} // namespace latdir::detail
