// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hierlabel/hierarchy.hpp"

namespace hierlabel {

/// Raw per-node scores f_i(x), used as log-potentials of active labels.
using ScoreVector = std::vector<double>;

/// A graph together with its legal states, enumerated once at construction.
/// Immutable afterwards, so one instance can be shared by concurrent evaluations.
class StateSpace {
public:
    explicit StateSpace(LabelGraph graph);

    const LabelGraph& graph() const noexcept { return graph_; }
    std::size_t node_count() const noexcept { return graph_.size(); }
    std::span<const StateMask> states() const noexcept { return states_; }
    std::size_t state_count() const noexcept { return states_.size(); }

    /// Whether some legal state has node `i` equal to `value`.
    bool admits(std::size_t i, bool value) const { return value ? admits_one_.at(i) : admits_zero_.at(i); }
    /// Whether some legal state agrees with every observed entry.
    bool admits(const ObservedLabels& observed) const noexcept;

private:
    LabelGraph graph_;
    std::vector<StateMask> states_;
    std::vector<bool> admits_one_;
    std::vector<bool> admits_zero_;
};

/// Normalised distribution p(y|x) over the legal states of a space. Illegal states are
/// outside the support. Holds a pointer to the space, which must outlive it.
class JointDistribution {
public:
    const StateSpace& space() const noexcept { return *space_; }
    /// Probabilities aligned with `space().states()`.
    std::span<const double> probs() const noexcept { return probs_; }
    /// Unnormalised log-masses Σ_{i active} score[i], aligned with `space().states()`.
    std::span<const double> log_masses() const noexcept { return log_masses_; }
    double log_partition() const noexcept { return log_z_; }

    /// p(state); zero for states outside the legal set.
    double probability(StateMask state) const;

private:
    friend JointDistribution joint(const StateSpace&, std::span<const double>);

    const StateSpace* space_ = nullptr;
    std::vector<double> log_masses_;
    std::vector<double> probs_;
    double log_z_ = 0.0;
};

/// Throws Error(dimension) on a length mismatch and Error(input) on a non-finite score.
void check_scores(const StateSpace& space, std::span<const double> scores);

/// Exact joint over the legal states; log Z by log-sum-exp.
JointDistribution joint(const StateSpace& space, std::span<const double> scores);

/// p(y_node = 1 | x).
double marginal(const JointDistribution& dist, std::size_t node);
/// All N marginals in one pass.
std::vector<double> marginals(const JointDistribution& dist);

/// p(y_node = 1 | y_I, x). Throws Error(infeasible_evidence) when no legal state matches.
double conditional_marginal(const JointDistribution& dist, const ObservedLabels& observed, std::size_t node);
/// All N conditional marginals given the evidence.
std::vector<double> conditional_marginals(const JointDistribution& dist, const ObservedLabels& observed);

/// log p(y_I | x) = log Σ_{y: y_I matches} p(y | x). Zero for empty evidence.
double log_evidence(const JointDistribution& dist, const ObservedLabels& observed);

/// Marginal of every node given raw scores. Index 0 is the real/fake verdict.
std::vector<double> predict(const StateSpace& space, std::span<const double> scores);

/// Throws Error(dimension) when an observed node id is >= the node count.
void check_observed(const StateSpace& space, const ObservedLabels& observed);

}  // namespace hierlabel
