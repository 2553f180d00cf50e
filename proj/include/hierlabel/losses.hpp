// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hierlabel/hierarchy.hpp"
#include "hierlabel/inference.hpp"

namespace hierlabel {

/// Strictly positive per-node loss weights, shared by every sample.
class TaskWeights {
public:
    TaskWeights() = default;
    /// Throws Error(input) unless every entry is finite and > 0.
    explicit TaskWeights(std::vector<double> lambda);
    static TaskWeights uniform(std::size_t n, double value);

    std::size_t size() const noexcept { return lambda_.size(); }
    double operator[](std::size_t i) const { return lambda_.at(i); }
    std::span<const double> values() const noexcept { return lambda_; }

    friend bool operator==(const TaskWeights&, const TaskWeights&) = default;

private:
    std::vector<double> lambda_;
};

struct LossResult {
    double value = 0.0;
    std::vector<double> grad_scores;  // d value / d score_i
};

/// −log p(y_I | x), unobserved labels marginalised out. The gradient is
/// E[y] − E[y | y_I], exact.
LossResult joint_likelihood_loss(const StateSpace& space, std::span<const double> scores, const ObservedLabels& observed);

/// −Σ_{i ∈ I} λ_i log p(y_i | x). Each term's gradient is E[y] − E[y | y_i].
LossResult marginal_likelihood_loss(const StateSpace& space, std::span<const double> scores,
                                    const ObservedLabels& observed, const TaskWeights& weights);

/// Per-node terms −log p(y_i | x) of the marginal loss (zero for unobserved nodes), unweighted.
std::vector<double> marginal_task_losses(const StateSpace& space, std::span<const double> scores,
                                         const ObservedLabels& observed);

/// Σ_{i ∈ I} λ_i · logistic loss of score_i alone, ignoring the hierarchy.
LossResult independent_logistic_loss(std::span<const double> scores, const ObservedLabels& observed,
                                     const TaskWeights& weights);
/// Per-node logistic terms of `independent_logistic_loss`, unweighted.
std::vector<double> independent_task_losses(std::span<const double> scores, const ObservedLabels& observed);

enum class LossKind { joint, marginal, independent };

const char* to_string(LossKind kind) noexcept;

struct ScoredExample {
    ScoreVector scores;
    ObservedLabels observed;
};

struct BatchLoss {
    double value = 0.0;
    /// One row per sample: d(mean loss) / d(score) for that sample, i.e. already scaled by 1/K.
    std::vector<std::vector<double>> grad_scores;
};

/// Mean loss over the batch. Samples are evaluated in parallel and reduced in sample order,
/// so the result does not depend on the thread count. Throws Error(input) on an empty batch.
BatchLoss batch_loss(LossKind kind, const StateSpace& space, std::span<const ScoredExample> batch,
                     const TaskWeights& weights);
/// Single-threaded reference for `batch_loss`.
BatchLoss batch_loss_serial(LossKind kind, const StateSpace& space, std::span<const ScoredExample> batch,
                            const TaskWeights& weights);

/// Mean per-node task losses over the batch (hierarchical marginal terms, or plain logistic
/// terms for LossKind::independent). Entry 0 is the primary-task loss.
std::vector<double> batch_task_losses(LossKind kind, const StateSpace& space, std::span<const ScoredExample> batch);

}  // namespace hierlabel
