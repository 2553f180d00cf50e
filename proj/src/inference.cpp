// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "hierlabel/error.hpp"

namespace hierlabel {

StateSpace::StateSpace(LabelGraph graph)
    : graph_(std::move(graph)), states_(enumerate_legal_masks(graph_)),
      admits_one_(graph_.size(), false), admits_zero_(graph_.size(), false) {
    for (StateMask s : states_)
        for (std::size_t i = 0; i < graph_.size(); ++i) {
            if ((s >> i) & 1U)
                admits_one_[i] = true;
            else
                admits_zero_[i] = true;
        }
}

bool StateSpace::admits(const ObservedLabels& observed) const noexcept {
    return std::any_of(states_.begin(), states_.end(), [&](StateMask s) { return observed.matches(s); });
}

double JointDistribution::probability(StateMask state) const {
    const auto states = space_->states();
    const auto it = std::lower_bound(states.begin(), states.end(), state);
    if (it == states.end() || *it != state) return 0.0;
    return probs_[static_cast<std::size_t>(it - states.begin())];
}

void check_scores(const StateSpace& space, std::span<const double> scores) {
    if (scores.size() != space.node_count())
        throw Error(ErrorKind::dimension, "score vector has " + std::to_string(scores.size()) + " entries, graph has " +
                                              std::to_string(space.node_count()) + " nodes");
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (!std::isfinite(scores[i]))
            throw Error(ErrorKind::input, "score " + std::to_string(i) + " is not finite");
}

void check_observed(const StateSpace& space, const ObservedLabels& observed) {
    const std::size_t n = space.node_count();
    if (n < kMaxGraphNodes && (observed.mask() >> n) != 0)
        throw Error(ErrorKind::dimension, "observed labels reference a node id >= " + std::to_string(n));
}

namespace {

double state_log_mass(StateMask s, std::span<const double> scores) {
    double e = 0.0;
    for (; s != 0; s &= s - 1) e += scores[static_cast<std::size_t>(std::countr_zero(s))];
    return e;
}

void check_node(const JointDistribution& dist, std::size_t node) {
    if (node >= dist.space().node_count())
        throw Error(ErrorKind::dimension, "node id " + std::to_string(node) + " out of range");
}

struct Conditioned {
    double log_mass = 0.0;  // log Σ_{matching} exp(log_mass_k), unnormalised
    std::vector<double> expectations;
};

Conditioned condition(const JointDistribution& dist, const ObservedLabels& observed) {
    check_observed(dist.space(), observed);
    const auto states = dist.space().states();
    const auto masses = dist.log_masses();
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < states.size(); ++k)
        if (observed.matches(states[k])) peak = std::max(peak, masses[k]);
    if (peak == -std::numeric_limits<double>::infinity())
        throw Error(ErrorKind::infeasible_evidence, "observed labels match no legal state");

    const std::size_t n = dist.space().node_count();
    Conditioned out;
    out.expectations.assign(n, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        if (!observed.matches(states[k])) continue;
        const double w = std::exp(masses[k] - peak);
        total += w;
        for (StateMask s = states[k]; s != 0; s &= s - 1) out.expectations[static_cast<std::size_t>(std::countr_zero(s))] += w;
    }
    for (double& e : out.expectations) e /= total;
    out.log_mass = peak + std::log(total);
    return out;
}

}  // namespace

JointDistribution joint(const StateSpace& space, std::span<const double> scores) {
    check_scores(space, scores);
    const auto states = space.states();
    JointDistribution dist;
    dist.space_ = &space;
    dist.log_masses_.resize(states.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < states.size(); ++k) {
        dist.log_masses_[k] = state_log_mass(states[k], scores);
        peak = std::max(peak, dist.log_masses_[k]);
    }
    double total = 0.0;
    for (double e : dist.log_masses_) total += std::exp(e - peak);
    dist.log_z_ = peak + std::log(total);
    dist.probs_.resize(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) dist.probs_[k] = std::exp(dist.log_masses_[k] - dist.log_z_);
    return dist;
}

double marginal(const JointDistribution& dist, std::size_t node) {
    check_node(dist, node);
    const auto states = dist.space().states();
    const auto probs = dist.probs();
    double sum = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k)
        if ((states[k] >> node) & 1U) sum += probs[k];
    return std::min(sum, 1.0);
}

std::vector<double> marginals(const JointDistribution& dist) {
    const auto states = dist.space().states();
    const auto probs = dist.probs();
    std::vector<double> out(dist.space().node_count(), 0.0);
    for (std::size_t k = 0; k < states.size(); ++k)
        for (StateMask s = states[k]; s != 0; s &= s - 1) out[static_cast<std::size_t>(std::countr_zero(s))] += probs[k];
    for (double& m : out) m = std::min(m, 1.0);
    return out;
}

double conditional_marginal(const JointDistribution& dist, const ObservedLabels& observed, std::size_t node) {
    check_node(dist, node);
    return std::min(condition(dist, observed).expectations[node], 1.0);
}

std::vector<double> conditional_marginals(const JointDistribution& dist, const ObservedLabels& observed) {
    auto out = condition(dist, observed).expectations;
    for (double& m : out) m = std::min(m, 1.0);
    return out;
}

double log_evidence(const JointDistribution& dist, const ObservedLabels& observed) {
    if (observed.empty()) return 0.0;
    return std::min(condition(dist, observed).log_mass - dist.log_partition(), 0.0);
}

std::vector<double> predict(const StateSpace& space, std::span<const double> scores) {
    return marginals(joint(space, scores));
}

}  // namespace hierlabel
