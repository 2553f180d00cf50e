// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hierlabel/inference.hpp"

namespace hierlabel {

enum class Architecture : std::uint32_t { linear = 0, mlp1 = 1 };

const char* to_string(Architecture arch) noexcept;
std::optional<Architecture> parse_architecture(std::string_view text) noexcept;

/// Parameters of the scorer f(x; θ), stored flat in a fixed row-major layout:
///
///   linear: W (N x D), b (N)                          scores = W x + b
///   mlp1:   W1 (H x D), b1 (H), W2 (N x H), b2 (N)    scores = W2 tanh(W1 x + b1) + b2
///
/// The checkpoint format stores `values()` in exactly this order.
class ScorerParams {
public:
    ScorerParams() = default;

    /// All-zero parameters. `hidden` must be 0 for linear and > 0 for mlp1.
    static ScorerParams zeros(Architecture arch, std::size_t inputs, std::size_t hidden, std::size_t outputs);
    /// Weights uniform in ±1/sqrt(fan_in), biases zero.
    static ScorerParams initialize(Architecture arch, std::size_t inputs, std::size_t hidden, std::size_t outputs,
                                   std::uint64_t seed);
    /// Wraps existing values; throws Error(dimension) when the count does not fit the shape.
    static ScorerParams from_values(Architecture arch, std::size_t inputs, std::size_t hidden, std::size_t outputs,
                                    std::vector<double> values);

    static std::size_t parameter_count(Architecture arch, std::size_t inputs, std::size_t hidden, std::size_t outputs);

    Architecture architecture() const noexcept { return arch_; }
    std::size_t input_dim() const noexcept { return inputs_; }
    std::size_t hidden_dim() const noexcept { return hidden_; }
    std::size_t output_dim() const noexcept { return outputs_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const ScorerParams&, const ScorerParams&) = default;

private:
    Architecture arch_ = Architecture::linear;
    std::size_t inputs_ = 0;
    std::size_t hidden_ = 0;
    std::size_t outputs_ = 0;
    std::vector<double> values_;
};

/// Throws Error(dimension) on an input-length mismatch.
ScoreVector forward(const ScorerParams& params, std::span<const double> x);

/// Gradient of scoresᵀ·grad_scores with respect to every parameter, in `values()` layout.
std::vector<double> backward(const ScorerParams& params, std::span<const double> x, std::span<const double> grad_scores);
/// Adds the gradient into `grad_out` instead of returning it.
void accumulate_backward(const ScorerParams& params, std::span<const double> x, std::span<const double> grad_scores,
                         std::span<double> grad_out);

struct SgdState {
    std::vector<double> velocity;
    friend bool operator==(const SgdState&, const SgdState&) = default;
};

/// Classical momentum: v ← μ v + g, θ ← θ − lr v. Refuses (Error(numeric)) and leaves the
/// parameters untouched when any gradient entry is non-finite.
void sgd_step(ScorerParams& params, std::span<const double> grads, double lr, double momentum, SgdState& state);

}  // namespace hierlabel
