#pragma once

// Little-endian binary stream helpers shared by the feature cache and the
// policy checkpoint formats.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "speechrl/errors.hpp"

namespace speechrl::binio {

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw TruncatedFile(std::string("truncated while reading ") + what);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

inline void write_bytes(std::ostream& out, const void* data, std::size_t len) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

inline void read_bytes(std::istream& in, void* data, std::size_t len, const char* what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (!in) throw TruncatedFile(std::string("truncated while reading ") + what);
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    write_bytes(out, s.data(), s.size());
}

inline std::string read_string(std::istream& in, const char* what) {
    auto len = read_le<std::uint16_t>(in, what);
    std::string s(len, '\0');
    if (len > 0) read_bytes(in, s.data(), len, what);
    return s;
}

}  // namespace speechrl::binio
