// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hierlabel/bilevel.hpp"
#include "hierlabel/hierarchy.hpp"

namespace hierlabel {

/// One manipulation method: which labels it switches on, which non-targeted labels are
/// left unobserved, and its own feature displacement.
struct MethodSpec {
    std::uint32_t method_id = 0;  // 1-based; 0 denotes real samples
    std::string name;
    std::vector<std::size_t> target_nodes;      // active labels, root included
    std::vector<std::size_t> unobserved_nodes;  // masked labels, never targeted ones
    std::vector<double> signature;              // method-specific displacement, length D
    double noise_sigma = 0.5;
};

/// Everything `generate` needs: the graph, the methods and the feature model.
///
/// Real sample:  x = b_id + ε,                ε ~ N(0, real_noise_sigma² I)
/// Fake sample:  x = b_id + Σ_{i active} s_i + u·Σ_{i unobserved} s_i + m + ε,
///               ε ~ N(0, noise_sigma² I)
/// with b_id ~ N(0, identity_sigma² I) per identity, s_i the node signatures, m the method
/// signature and u = unobserved_signature_scale (ambiguous, partially visible change).
struct Scenario {
    LabelGraph graph;
    std::vector<MethodSpec> methods;
    std::size_t feature_dim = 32;
    std::vector<std::vector<double>> node_signatures;  // N rows of length D
    double identity_sigma = 1.0;
    double real_noise_sigma = 0.5;
    double unobserved_signature_scale = 0.5;

    /// Throws Error(config) naming the offending method when a method's state is illegal,
    /// a targeted node is masked, or a vector has the wrong length.
    void validate() const;

    /// Label state a method induces.
    LabelState method_state(const MethodSpec& method) const;
    StateMask method_observed_mask(const MethodSpec& method) const;
    const MethodSpec* find_method(std::uint32_t method_id) const noexcept;
};

struct SyntheticSample {
    std::vector<double> features;
    LabelState state;
    ObservedLabels observed;
    std::uint32_t method_id = 0;
    std::uint64_t identity_id = 0;

    friend bool operator==(const SyntheticSample&, const SyntheticSample&) = default;
};

/// Default face scenario: 12-node hierarchy, 12 methods over the 5 attributes (3 age,
/// 3 expression, 2 gender, 2 identity, 2 pose), gender/identity methods leaving the age
/// label unobserved. Signatures are fixed (drawn from a constant seed).
Scenario default_ffsc_scenario(std::size_t feature_dim = 32);

/// Scenario JSON (see README) to and from text. Loading validates.
Scenario parse_scenario(std::string_view json_text);
std::string scenario_to_json(const Scenario& scenario);

/// `n_real` identities with one real sample each, then `n_fake_per_method` fakes per method.
/// Fake j of method index m belongs to identity (m·n_real/M + j) mod n_real. Pure function of the arguments; samples are generated
/// in parallel from per-sample seeds.
std::vector<SyntheticSample> generate(const Scenario& scenario, std::size_t n_real, std::size_t n_fake_per_method,
                                      std::uint64_t seed);

enum class Protocol { intra, p1, p2 };

const char* to_string(Protocol protocol) noexcept;
std::optional<Protocol> parse_protocol(std::string_view text) noexcept;

struct SplitRequest {
    Protocol protocol = Protocol::intra;
    std::vector<std::uint32_t> held_out_methods;  // p1
    std::optional<std::size_t> held_out_attribute;  // p2
    std::array<double, 3> ratios{7.8, 1.1, 1.1};  // train : val : test, normalised
    std::uint64_t seed = 0;
};

struct SplitPlan {
    Protocol protocol = Protocol::intra;
    std::vector<std::uint32_t> held_out_methods;
    std::optional<std::size_t> held_out_attribute;
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Identity-disjoint train/val/test partition. Protocol filters remove held-out material
/// from the training part only. Throws Error(capacity) with fewer than three identities and
/// Error(config) for inconsistent hold-outs.
SplitPlan make_split(std::span<const SyntheticSample> samples, const SplitRequest& request);

std::vector<Example> to_examples(std::span<const SyntheticSample> samples, std::span<const std::size_t> indices);

/// Dataset file, little-endian:
///   8 bytes "HLDSET01", u32 version (1), u64 N, u64 D, u64 count, u64 graph hash, u64 seed,
///   then per sample: u64 identity_id, u32 method_id, u32 state bits, u32 observed mask,
///   D f64 features. Bit i of the state/mask words is node i.
struct Dataset {
    static constexpr std::string_view kMagic = "HLDSET01";
    static constexpr std::uint32_t kVersion = 1;

    std::size_t node_count = 0;
    std::size_t feature_dim = 0;
    std::uint64_t graph_hash = 0;
    std::uint64_t seed = 0;
    std::vector<SyntheticSample> samples;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::string encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::string_view bytes, const std::string& source = "dataset");
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

/// Tab-separated inspection export: identity, method, state, observed ('?' = unobserved),
/// then the features.
std::string dataset_to_text(const Dataset& dataset);

}  // namespace hierlabel
