#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace asn {

// FNV-1a 64-bit. Used for config hashes, artifact checksums and seed
// derivation. Not cryptographic; staleness detection only.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Named sub-stream derivation: one global seed, per-stage/per-component
// streams keyed by label. No ambient entropy anywhere in the toolkit.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    return splitmix64(parent ^ fnv1a64(label));
}

std::string hex64(std::uint64_t value);

// Checksum of a file's raw bytes; throws asn::Error on I/O failure.
std::uint64_t checksum_file(const std::string& path);

} // namespace asn
