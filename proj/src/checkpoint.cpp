// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/checkpoint.hpp"

#include "hierlabel/binary_io.hpp"
#include "hierlabel/error.hpp"
#include "hierlabel/hierarchy.hpp"

namespace hierlabel {

std::string encode_checkpoint(const Checkpoint& ck) {
    ByteWriter w;
    w.bytes(Checkpoint::kMagic);
    w.u32(Checkpoint::kVersion);
    w.u32(static_cast<std::uint32_t>(ck.params.architecture()));
    w.u64(ck.params.input_dim());
    w.u64(ck.params.hidden_dim());
    w.u64(ck.params.output_dim());
    w.u64(ck.graph_hash);
    w.u64(ck.seed);
    w.string(ck.graph_config);
    w.u64(ck.params.size());
    w.f64s(ck.params.values());
    w.f64s(ck.weights.values());
    w.u64(ck.optimizer.velocity.size());
    w.f64s(ck.optimizer.velocity);
    return w.data();
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source) {
    ByteReader r(bytes, source);
    if (r.bytes(Checkpoint::kMagic.size()) != Checkpoint::kMagic) throw Error(ErrorKind::io, source + ": not a checkpoint");
    if (const auto version = r.u32(); version != Checkpoint::kVersion)
        throw Error(ErrorKind::io, source + ": unsupported checkpoint version " + std::to_string(version));
    const auto arch_tag = r.u32();
    if (arch_tag > 1) throw Error(ErrorKind::io, source + ": unknown architecture tag");
    const auto arch = static_cast<Architecture>(arch_tag);
    const auto d = static_cast<std::size_t>(r.u64());
    const auto h = static_cast<std::size_t>(r.u64());
    const auto n = static_cast<std::size_t>(r.u64());
    if (n == 0 || n > kMaxGraphNodes || d == 0 || d > (1U << 20) || h > (1U << 20))
        throw Error(ErrorKind::io, source + ": implausible dimensions");
    Checkpoint ck;
    ck.graph_hash = r.u64();
    ck.seed = r.u64();
    ck.graph_config = r.string();
    const auto count = static_cast<std::size_t>(r.u64());
    if (count != ScorerParams::parameter_count(arch, d, h, n))
        throw Error(ErrorKind::io, source + ": parameter count does not match the header");
    try {
        ck.params = ScorerParams::from_values(arch, d, h, n, r.f64s(count));
        ck.weights = TaskWeights(r.f64s(n));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::io) throw;
        throw Error(ErrorKind::io, source + ": " + e.what());
    }
    const auto velocity = static_cast<std::size_t>(r.u64());
    if (velocity != 0 && velocity != count) throw Error(ErrorKind::io, source + ": optimizer state size mismatch");
    ck.optimizer.velocity = r.f64s(velocity);
    if (!r.at_end()) throw Error(ErrorKind::io, source + ": trailing bytes");
    return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path), path); }

}  // namespace hierlabel
