#include "core/grad/checkpoint.hpp"

#include <fstream>

#include "core/common/binio.hpp"
#include "core/common/error.hpp"

namespace asn::grad {

namespace {
constexpr char kMagic[4] = {'A', 'S', 'N', 'T'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open checkpoint for writing: " + path);

    out.write(kMagic, 4);
    binio::write_u32(out, kVersion);
    binio::write_u64(out, tensors.size());
    for (const auto& t : tensors) {
        binio::write_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        binio::write_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t e : t.shape) binio::write_u64(out, e);
        if (t.values.size() != shape_size(t.shape))
            fail(ErrorCode::InvalidArgument, "checkpoint: values/shape mismatch for tensor " + t.name);
        for (double v : t.values) binio::write_f64(out, v);
    }
    out.flush();
    if (!out) fail(ErrorCode::Io, "write failure on checkpoint: " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open checkpoint: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4))
        fail(ErrorCode::Parse, "not a checkpoint file (bad magic): " + path);
    const std::uint32_t version = binio::read_u32(in, "checkpoint version");
    if (version != kVersion)
        fail(ErrorCode::Parse, "unsupported checkpoint version " + std::to_string(version));

    const std::uint64_t count = binio::read_u64(in, "tensor count");
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedTensor t;
        const std::uint32_t name_len = binio::read_u32(in, "tensor name length");
        t.name.resize(name_len);
        in.read(t.name.data(), name_len);
        if (!in) fail(ErrorCode::Io, "truncated tensor name in " + path);
        const std::uint32_t rank = binio::read_u32(in, "tensor rank");
        t.shape.resize(rank);
        for (auto& e : t.shape) e = binio::read_u64(in, "tensor extent");
        t.values.resize(shape_size(t.shape));
        for (auto& v : t.values) v = binio::read_f64(in, "tensor value");
        tensors.push_back(std::move(t));
    }
    return tensors;
}

} // namespace asn::grad
