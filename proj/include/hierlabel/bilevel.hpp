// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hierlabel/error.hpp"
#include "hierlabel/losses.hpp"
#include "hierlabel/model.hpp"

namespace hierlabel {

/// One training record: features plus the observed part of its label state.
struct Example {
    std::vector<double> features;
    ObservedLabels observed;
};

/// Mean loss over a batch and its gradient with respect to the scorer parameters.
struct ObjectiveResult {
    double value = 0.0;
    std::vector<double> grad;
};

/// Scores every example. Examples are scored in parallel.
std::vector<ScoredExample> score_examples(const ScorerParams& params, std::span<const Example> examples);

/// Batch loss of `kind` through the scorer, with the exact gradient in parameter layout.
/// Per-sample gradients are reduced in sample order.
ObjectiveResult objective(LossKind kind, const StateSpace& space, const ScorerParams& params,
                          std::span<const Example> examples, const TaskWeights& weights);

/// Mean −log p(y_0 | x) over the examples whose root label is observed, with its gradient.
/// `kind` selects the head: hierarchical marginal, or the plain sigmoid of score 0 for
/// LossKind::independent.
ObjectiveResult primary_objective(LossKind kind, const StateSpace& space, const ScorerParams& params,
                                  std::span<const Example> examples);

/// Mean per-node task losses through the scorer (see batch_task_losses).
std::vector<double> task_losses(LossKind kind, const StateSpace& space, const ScorerParams& params,
                                std::span<const Example> examples);

struct BilevelConfig {
    double lr_theta = 0.1;
    double momentum = 0.9;
    double lr_lambda = 0.1;
    double lambda_init = 0.1;
    double epsilon_scale = 1e-2;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double lambda_floor = 1e-3;
    /// Softmax temperature of the dynamic weight average baseline.
    double dwa_temperature = 2.0;
    std::uint64_t seed = 0;

    /// Throws Error(config) when a field is out of range.
    void validate() const;
};

struct TraceRecord {
    std::size_t step = 0;
    double train_loss = 0.0;
    double val_primary_loss = 0.0;
    std::vector<double> lambda;
    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TrainTrace {
    std::vector<TraceRecord> records;
    friend bool operator==(const TrainTrace&, const TrainTrace&) = default;
};

/// Tab-separated trace: header `step train_loss val_primary_loss lambda_0 .. lambda_{N-1}`,
/// one row per step, values printed with 17 significant digits.
std::string format_trace(const TrainTrace& trace, std::size_t node_count);

/// Approximate d/dλ of the validation primary loss after one lookahead step
/// θ' = θ − lr_theta ∇_θ ℓ_ML(train; θ, λ). The mixed second derivative is replaced by a
/// symmetric difference of the per-task training losses at θ ± (ε/‖h‖)·h, where
/// h = ∇_θ' of the validation primary loss. Returns zeros when h = 0.
std::vector<double> hypergradient(const StateSpace& space, const ScorerParams& params, const TaskWeights& weights,
                                  std::span<const Example> train_batch, std::span<const Example> val_batch,
                                  double lr_theta, double epsilon_scale);

enum class Strategy { so, joint_likelihood, fixed_equal, fixed_given, dwa, independent };

const char* to_string(Strategy strategy) noexcept;
std::optional<Strategy> parse_strategy(std::string_view text) noexcept;
/// Loss minimised at the lower level under a strategy.
LossKind loss_kind(Strategy strategy) noexcept;

struct TrainResult {
    ScorerParams params;
    TaskWeights weights;
    SgdState optimizer;
    TrainTrace trace;
};

/// Raised when a loss turns non-finite; carries the trace up to the failing step.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, TrainTrace trace)
        : Error(ErrorKind::numeric, what), trace_(std::move(trace)) {}
    const TrainTrace& trace() const noexcept { return trace_; }

private:
    TrainTrace trace_;
};

/// Bi-level training. Each step draws disjoint train/validation minibatches from the epoch
/// permutation, updates λ ← max(λ − lr_lambda · hypergradient, lambda_floor), then takes a
/// momentum step on the weighted marginal loss.
TrainResult train(const StateSpace& space, std::span<const Example> data, const BilevelConfig& config,
                  const ScorerParams& initial);

/// Baseline strategies over the same batch schedule:
///   joint_likelihood  marginalised joint likelihood, no weights
///   fixed_equal       weighted marginal loss with λ = 1
///   fixed_given       weighted marginal loss with the supplied constant λ
///   dwa               dynamic weight average: λ_i = N softmax(r_i / T) with r_i the ratio of
///                     the last two epoch-mean task losses; λ = 1 for the first two epochs
///   independent       λ = 1 logistic loss per node, hierarchy ignored
/// Strategy::so forwards to `train`.
TrainResult train_baseline(Strategy strategy, const StateSpace& space, std::span<const Example> data,
                           const BilevelConfig& config, const ScorerParams& initial,
                           const std::optional<TaskWeights>& given = std::nullopt);

}  // namespace hierlabel
