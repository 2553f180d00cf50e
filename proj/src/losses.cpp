// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/losses.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <string>

#include "hierlabel/error.hpp"

namespace hierlabel {

TaskWeights::TaskWeights(std::vector<double> lambda) : lambda_(std::move(lambda)) {
    for (std::size_t i = 0; i < lambda_.size(); ++i)
        if (!std::isfinite(lambda_[i]) || lambda_[i] <= 0.0)
            throw Error(ErrorKind::input, "task weight " + std::to_string(i) + " must be finite and > 0");
}

TaskWeights TaskWeights::uniform(std::size_t n, double value) { return TaskWeights(std::vector<double>(n, value)); }

const char* to_string(LossKind kind) noexcept {
    switch (kind) {
        case LossKind::joint: return "joint";
        case LossKind::marginal: return "marginal";
        case LossKind::independent: return "independent";
    }
    return "?";
}

namespace {

// Softplus log(1 + e^t) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// Single-node conditioning statistics of a distribution, accumulated in one pass over the
// legal states with weights w_k = exp(log_mass_k − peak):
//   mass[v][i]      = Σ_{k: y_i = v} w_k
//   moment[v][i][j] = Σ_{k: y_i = v, y_j = 1} w_k
struct SingleNodeStats {
    std::size_t n = 0;
    double total = 0.0;
    std::vector<double> active;  // Σ_{k: y_j = 1} w_k
    std::vector<double> mass[2];
    std::vector<double> moment[2];  // n x n row-major

    double moment_at(int v, std::size_t i, std::size_t j) const { return moment[v][i * n + j]; }
};

SingleNodeStats single_node_stats(const JointDistribution& dist, StateMask rows) {
    const auto states = dist.space().states();
    const auto masses = dist.log_masses();
    const double peak = *std::max_element(masses.begin(), masses.end());
    SingleNodeStats st;
    st.n = dist.space().node_count();
    st.active.assign(st.n, 0.0);
    for (int v = 0; v < 2; ++v) {
        st.mass[v].assign(st.n, 0.0);
        st.moment[v].assign(st.n * st.n, 0.0);
    }
    for (std::size_t k = 0; k < states.size(); ++k) {
        const StateMask s = states[k];
        const double w = std::exp(masses[k] - peak);
        st.total += w;
        for (StateMask m = s; m != 0; m &= m - 1) st.active[static_cast<std::size_t>(std::countr_zero(m))] += w;
        for (StateMask r = rows; r != 0; r &= r - 1) {
            const auto i = static_cast<std::size_t>(std::countr_zero(r));
            const int v = static_cast<int>((s >> i) & 1U);
            st.mass[v][i] += w;
            double* row = st.moment[v].data() + i * st.n;
            for (StateMask m = s; m != 0; m &= m - 1) row[std::countr_zero(m)] += w;
        }
    }
    return st;
}

// Tiny conditioning masses lose relative precision (or underflow); those terms are redone
// in the log domain.
constexpr double kFastPathFloor = 1e-250;

struct NodeTerm {
    double loss = 0.0;                // −log p(y_i = v | x)
    std::vector<double> conditional;  // E[y | y_i = v]
};

NodeTerm node_term(const JointDistribution& dist, const SingleNodeStats& st, std::size_t i, bool value) {
    const StateSpace& space = dist.space();
    if (!space.admits(i, value))
        throw Error(ErrorKind::infeasible_evidence,
                    "no legal state has node " + std::to_string(i) + " = " + (value ? "1" : "0"));
    const int v = value ? 1 : 0;
    NodeTerm term;
    term.conditional.resize(st.n);
    const double m = st.mass[v][i];
    if (m > kFastPathFloor * st.total) {
        term.loss = std::log(st.total) - std::log(m);
        for (std::size_t j = 0; j < st.n; ++j) term.conditional[j] = st.moment_at(v, i, j) / m;
    } else {
        ObservedLabels single;
        single.set(i, value);
        term.loss = -log_evidence(dist, single);
        term.conditional = conditional_marginals(dist, single);
    }
    term.loss = std::max(term.loss, 0.0);
    return term;
}

void check_weights(const StateSpace& space, const TaskWeights& weights) {
    if (weights.size() != space.node_count())
        throw Error(ErrorKind::dimension, "task weights have " + std::to_string(weights.size()) + " entries, graph has " +
                                              std::to_string(space.node_count()) + " nodes");
}

}  // namespace

LossResult joint_likelihood_loss(const StateSpace& space, std::span<const double> scores, const ObservedLabels& observed) {
    check_scores(space, scores);
    check_observed(space, observed);
    LossResult out;
    out.grad_scores.assign(space.node_count(), 0.0);
    if (observed.empty()) return out;
    const JointDistribution dist = joint(space, scores);
    const auto conditioned = conditional_marginals(dist, observed);
    const auto unconditioned = marginals(dist);
    out.value = -log_evidence(dist, observed);
    for (std::size_t j = 0; j < space.node_count(); ++j) out.grad_scores[j] = unconditioned[j] - conditioned[j];
    return out;
}

LossResult marginal_likelihood_loss(const StateSpace& space, std::span<const double> scores,
                                    const ObservedLabels& observed, const TaskWeights& weights) {
    check_scores(space, scores);
    check_observed(space, observed);
    check_weights(space, weights);
    const std::size_t n = space.node_count();
    LossResult out;
    out.grad_scores.assign(n, 0.0);
    if (observed.empty()) return out;
    const JointDistribution dist = joint(space, scores);
    const SingleNodeStats st = single_node_stats(dist, observed.mask());
    for (const std::size_t i : observed.nodes()) {
        const NodeTerm term = node_term(dist, st, i, observed.value(i));
        const double lambda = weights[i];
        out.value += lambda * term.loss;
        for (std::size_t j = 0; j < n; ++j) out.grad_scores[j] += lambda * (st.active[j] / st.total - term.conditional[j]);
    }
    return out;
}

std::vector<double> marginal_task_losses(const StateSpace& space, std::span<const double> scores,
                                         const ObservedLabels& observed) {
    check_scores(space, scores);
    check_observed(space, observed);
    std::vector<double> out(space.node_count(), 0.0);
    if (observed.empty()) return out;
    const JointDistribution dist = joint(space, scores);
    const SingleNodeStats st = single_node_stats(dist, observed.mask());
    for (const std::size_t i : observed.nodes()) out[i] = node_term(dist, st, i, observed.value(i)).loss;
    return out;
}

std::vector<double> independent_task_losses(std::span<const double> scores, const ObservedLabels& observed) {
    std::vector<double> out(scores.size(), 0.0);
    for (const std::size_t i : observed.nodes()) {
        if (i >= scores.size()) throw Error(ErrorKind::dimension, "observed node id out of range");
        out[i] = softplus(observed.value(i) ? -scores[i] : scores[i]);
    }
    return out;
}

LossResult independent_logistic_loss(std::span<const double> scores, const ObservedLabels& observed,
                                     const TaskWeights& weights) {
    if (weights.size() != scores.size()) throw Error(ErrorKind::dimension, "task weights and scores differ in length");
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (!std::isfinite(scores[i])) throw Error(ErrorKind::input, "score " + std::to_string(i) + " is not finite");
    const auto terms = independent_task_losses(scores, observed);
    LossResult out;
    out.grad_scores.assign(scores.size(), 0.0);
    for (const std::size_t i : observed.nodes()) {
        out.value += weights[i] * terms[i];
        out.grad_scores[i] = weights[i] * (sigmoid(scores[i]) - (observed.value(i) ? 1.0 : 0.0));
    }
    return out;
}

namespace {

LossResult sample_loss(LossKind kind, const StateSpace& space, const ScoredExample& ex, const TaskWeights& weights) {
    switch (kind) {
        case LossKind::joint: return joint_likelihood_loss(space, ex.scores, ex.observed);
        case LossKind::marginal: return marginal_likelihood_loss(space, ex.scores, ex.observed, weights);
        case LossKind::independent:
            if (ex.scores.size() != space.node_count()) throw Error(ErrorKind::dimension, "score vector length mismatch");
            return independent_logistic_loss(ex.scores, ex.observed, weights);
    }
    throw Error(ErrorKind::config, "unknown loss kind");
}

BatchLoss reduce(std::vector<LossResult>& per_sample) {
    const double scale = 1.0 / static_cast<double>(per_sample.size());
    BatchLoss out;
    out.grad_scores.reserve(per_sample.size());
    for (auto& r : per_sample) {
        out.value += r.value;
        for (double& g : r.grad_scores) g *= scale;
        out.grad_scores.push_back(std::move(r.grad_scores));
    }
    out.value *= scale;
    return out;
}

void check_batch(std::span<const ScoredExample> batch) {
    if (batch.empty()) throw Error(ErrorKind::input, "empty batch");
}

}  // namespace

BatchLoss batch_loss_serial(LossKind kind, const StateSpace& space, std::span<const ScoredExample> batch,
                            const TaskWeights& weights) {
    check_batch(batch);
    std::vector<LossResult> per_sample;
    per_sample.reserve(batch.size());
    for (const auto& ex : batch) per_sample.push_back(sample_loss(kind, space, ex, weights));
    return reduce(per_sample);
}

BatchLoss batch_loss(LossKind kind, const StateSpace& space, std::span<const ScoredExample> batch,
                     const TaskWeights& weights) {
    check_batch(batch);
    std::vector<LossResult> per_sample(batch.size());
    const auto count = static_cast<std::int64_t>(batch.size());
    // Exceptions must not cross the parallel region; the first one (by sample index) is rethrown.
    std::vector<std::exception_ptr> failures(batch.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        try {
            per_sample[idx] = sample_loss(kind, space, batch[idx], weights);
        } catch (...) {
            failures[idx] = std::current_exception();
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return reduce(per_sample);
}

std::vector<double> batch_task_losses(LossKind kind, const StateSpace& space, std::span<const ScoredExample> batch) {
    check_batch(batch);
    const std::size_t n = space.node_count();
    std::vector<std::vector<double>> per_sample(batch.size());
    const auto count = static_cast<std::int64_t>(batch.size());
    std::vector<std::exception_ptr> failures(batch.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        try {
            const auto& ex = batch[idx];
            per_sample[idx] = kind == LossKind::independent ? independent_task_losses(ex.scores, ex.observed)
                                                            : marginal_task_losses(space, ex.scores, ex.observed);
        } catch (...) {
            failures[idx] = std::current_exception();
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    std::vector<double> out(n, 0.0);
    for (const auto& row : per_sample)
        for (std::size_t i = 0; i < n; ++i) out[i] += row[i];
    for (double& v : out) v /= static_cast<double>(batch.size());
    return out;
}

}  // namespace hierlabel
