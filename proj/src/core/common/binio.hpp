#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "core/common/error.hpp"

// Little-endian primitives for the checkpoint container. Values are
// byte-swapped on big-endian hosts so files are portable and bit-exact.

namespace asn::binio {

template <typename T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        T out;
        auto* src = reinterpret_cast<unsigned char*>(&v);
        auto* dst = reinterpret_cast<unsigned char*>(&out);
        for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
        return out;
    }
    return v;
}

template <typename T>
void write_raw(std::ostream& out, T v) {
    T le = to_le(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

inline void write_u32(std::ostream& out, std::uint32_t v) { write_raw(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_raw(out, v); }

inline void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u64(out, bits);
}

template <typename T>
T read_raw(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail(ErrorCode::Io, std::string("truncated read: ") + what);
    return to_le(v);
}

inline std::uint32_t read_u32(std::istream& in, const char* what) { return read_raw<std::uint32_t>(in, what); }
inline std::uint64_t read_u64(std::istream& in, const char* what) { return read_raw<std::uint64_t>(in, what); }

inline double read_f64(std::istream& in, const char* what) {
    std::uint64_t bits = read_u64(in, what);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

} // namespace asn::binio
