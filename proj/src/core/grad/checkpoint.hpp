#pragma once

#include <string>
#include <vector>

#include "core/grad/tensor.hpp"

namespace asn::grad {

// Flat binary parameter container. Layout, all little-endian:
//   magic "ASNT" | u32 version | u64 tensor count
//   per tensor: u32 name length | name (UTF-8) | u32 rank | u64 extents[rank]
//               | f64 values[prod(extents)]
// Round-trips are bit-exact.
struct NamedTensor {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

} // namespace asn::grad
