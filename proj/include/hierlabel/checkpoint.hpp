// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "hierlabel/losses.hpp"
#include "hierlabel/model.hpp"

namespace hierlabel {

/// Trained model state. Binary layout, all integers and floats little-endian:
///
///   8 bytes   magic "HLCKPT01"
///   u32       format version (1)
///   u32       architecture (0 linear, 1 mlp1)
///   u64 x 3   D, H, N
///   u64       graph hash
///   u64       experiment seed
///   u64 + n   canonical graph config text (length-prefixed)
///   u64       parameter count P, then P f64 in ScorerParams layout
///   N f64     task weights λ
///   u64       velocity count V (0 or P), then V f64 optimizer velocity
struct Checkpoint {
    static constexpr std::string_view kMagic = "HLCKPT01";
    static constexpr std::uint32_t kVersion = 1;

    ScorerParams params;
    TaskWeights weights;
    SgdState optimizer;
    std::uint64_t graph_hash = 0;
    std::uint64_t seed = 0;
    std::string graph_config;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
/// Throws Error(io) on a malformed or truncated buffer.
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source = "checkpoint");

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hierlabel
