// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "hierlabel/error.hpp"
#include "hierlabel/losses.hpp"
#include "support/oracles.hpp"

namespace hierlabel {
namespace {

struct Instance {
    LabelGraph graph;
    std::vector<double> scores;
    ObservedLabels observed;
    TaskWeights weights;
};

Instance random_instance(Rng& rng, std::size_t max_nodes) {
    LabelGraph g = oracle::random_graph(rng, max_nodes);
    const auto states = oracle::legal_states(g);
    const StateMask truth = states[rng.below(states.size())];
    ObservedLabels obs;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (rng.bernoulli(0.6)) obs.set(i, ((truth >> i) & 1U) != 0);
    if (obs.empty()) obs.set(0, (truth & 1U) != 0);
    std::vector<double> scores(g.size()), lambda(g.size());
    for (double& v : scores) v = rng.uniform(-3.0, 3.0);
    for (double& v : lambda) v = rng.uniform(0.1, 2.0);
    return {std::move(g), std::move(scores), obs, TaskWeights(std::move(lambda))};
}

TEST(Losses, ChainAnchors) {
    const StateSpace space(oracle::chain3());
    ObservedLabels root_on;
    root_on.set(0, true);
    const auto j = joint_likelihood_loss(space, std::vector<double>{1.0, 0.0, 0.0}, root_on);
    EXPECT_NEAR(j.value, 0.31326168751822286, 1e-12);

    const auto full = ObservedLabels::all_of(LabelState(3, 0b111));
    const auto m = marginal_likelihood_loss(space, std::vector<double>{0.0, 0.0, 0.0}, full, TaskWeights::uniform(3, 1.0));
    EXPECT_NEAR(m.value, 3.0 * std::log(2.0), 1e-12);
}

TEST(Losses, JointReducesToNegLogJointWhenFullyObserved) {
    Rng rng(31);
    for (int t = 0; t < 100; ++t) {
        const LabelGraph g = oracle::random_graph(rng, 10);
        const StateSpace space(g);
        std::vector<double> scores(g.size());
        for (double& v : scores) v = rng.uniform(-3.0, 3.0);
        const StateMask truth = space.states()[rng.below(space.state_count())];
        const auto dist = joint(space, scores);
        const auto loss = joint_likelihood_loss(space, scores, ObservedLabels::all_of(LabelState(g.size(), truth)));
        EXPECT_NEAR(loss.value, -std::log(dist.probability(truth)), 1e-10);
    }
}

TEST(Losses, SingleNodeMarginalIsLogistic) {
    const StateSpace space(oracle::single_node());
    for (double f : {-4.0, -0.5, 0.0, 1.3, 6.0}) {
        for (bool y : {false, true}) {
            ObservedLabels obs;
            obs.set(0, y);
            const auto loss = marginal_likelihood_loss(space, std::vector<double>{f}, obs, TaskWeights::uniform(1, 1.0));
            const double want = std::log1p(std::exp(y ? -f : f));
            EXPECT_NEAR(loss.value, want, 1e-12);
            const double sig = 1.0 / (1.0 + std::exp(-f));
            EXPECT_NEAR(loss.grad_scores[0], sig - (y ? 1.0 : 0.0), 1e-12);
        }
    }
}

TEST(Losses, MarginalTermsAreRestrictedJointLosses) {
    Rng rng(32);
    for (int t = 0; t < 100; ++t) {
        const Instance in = random_instance(rng, 10);
        const StateSpace space(in.graph);
        const auto terms = marginal_task_losses(space, in.scores, in.observed);
        double weighted = 0.0;
        for (std::size_t i = 0; i < in.graph.size(); ++i) {
            if (!in.observed.contains(i)) {
                EXPECT_EQ(terms[i], 0.0);
                continue;
            }
            ObservedLabels only;
            only.set(i, in.observed.value(i));
            EXPECT_NEAR(terms[i], joint_likelihood_loss(space, in.scores, only).value, 1e-10);
            weighted += in.weights[i] * terms[i];
        }
        EXPECT_NEAR(marginal_likelihood_loss(space, in.scores, in.observed, in.weights).value, weighted, 1e-10);
    }
}

TEST(Losses, ValuesMatchOracleAndAreNonnegative) {
    Rng rng(33);
    for (int t = 0; t < 100; ++t) {
        const Instance in = random_instance(rng, 10);
        const StateSpace space(in.graph);
        const auto states = oracle::legal_states(in.graph);
        const double j = joint_likelihood_loss(space, in.scores, in.observed).value;
        EXPECT_NEAR(j, oracle::evidence_nll(states, in.scores, in.observed.mask(), in.observed.values()), 1e-10);
        EXPECT_GE(j, 0.0);
        EXPECT_GE(marginal_likelihood_loss(space, in.scores, in.observed, in.weights).value, 0.0);
    }
}

TEST(Losses, GradientsMatchFiniteDifferences) {
    Rng rng(34);
    for (int t = 0; t < 500; ++t) {
        const Instance in = random_instance(rng, 12);
        const StateSpace space(in.graph);
        const auto jl = joint_likelihood_loss(space, in.scores, in.observed);
        const auto jfd = oracle::central_difference(
            [&](std::span<const double> s) { return joint_likelihood_loss(space, s, in.observed).value; }, in.scores, 1e-4);
        double worst = 0.0;
        EXPECT_TRUE(oracle::gradients_close(jl.grad_scores, jfd, 1e-5, 1e-8, &worst)) << "joint, worst " << worst;
        const auto ml = marginal_likelihood_loss(space, in.scores, in.observed, in.weights);
        const auto mfd = oracle::central_difference(
            [&](std::span<const double> s) { return marginal_likelihood_loss(space, s, in.observed, in.weights).value; },
            in.scores, 1e-4);
        EXPECT_TRUE(oracle::gradients_close(ml.grad_scores, mfd, 1e-5, 1e-8, &worst)) << "marginal, worst " << worst;
    }
}

TEST(Losses, MarginalGradientSurvivesTinyConditioningMass) {
    // Evidence of probability ~e^-700 exercises the log-domain path.
    const StateSpace space(default_graph());
    std::vector<double> scores(12, 0.0);
    scores[0] = -700.0;
    ObservedLabels obs;
    obs.set(0, true);
    obs.set(1, true);
    obs.set(6, true);
    const auto loss = marginal_likelihood_loss(space, scores, obs, TaskWeights::uniform(12, 1.0));
    EXPECT_TRUE(std::isfinite(loss.value));
    for (double g : loss.grad_scores) EXPECT_TRUE(std::isfinite(g));
    EXPECT_NEAR(loss.grad_scores[0], -3.0, 1e-9);
}

TEST(Losses, IndependentLogistic) {
    const std::vector<double> scores{0.5, -1.0, 2.0};
    ObservedLabels obs;
    obs.set(0, true);
    obs.set(2, false);
    const TaskWeights w({1.0, 5.0, 0.5});
    const auto loss = independent_logistic_loss(scores, obs, w);
    const double want = std::log1p(std::exp(-0.5)) + 0.5 * std::log1p(std::exp(2.0));
    EXPECT_NEAR(loss.value, want, 1e-12);
    EXPECT_EQ(loss.grad_scores[1], 0.0);
    const auto fd = oracle::central_difference(
        [&](std::span<const double> s) { return independent_logistic_loss(s, obs, w).value; }, scores, 1e-4);
    EXPECT_TRUE(oracle::gradients_close(loss.grad_scores, fd, 1e-5, 1e-8));
}

TEST(Losses, BatchIsMeanOfSamples) {
    Rng rng(35);
    const StateSpace space(default_graph());
    std::vector<ScoredExample> batch;
    for (int k = 0; k < 6; ++k) {
        ScoredExample ex;
        ex.scores.resize(12);
        for (double& v : ex.scores) v = rng.uniform(-2.0, 2.0);
        const StateMask truth = space.states()[rng.below(space.state_count())];
        ex.observed = k % 2 == 0 ? ObservedLabels::all_of(LabelState(12, truth))
                                 : ObservedLabels::masked(LabelState(12, truth), 0b000000111111);
        batch.push_back(ex);
    }
    const auto w = TaskWeights::uniform(12, 0.7);
    for (LossKind kind : {LossKind::joint, LossKind::marginal, LossKind::independent}) {
        double sum = 0.0;
        for (const auto& ex : batch) {
            switch (kind) {
            case LossKind::joint: sum += joint_likelihood_loss(space, ex.scores, ex.observed).value; break;
            case LossKind::marginal: sum += marginal_likelihood_loss(space, ex.scores, ex.observed, w).value; break;
            case LossKind::independent: sum += independent_logistic_loss(ex.scores, ex.observed, w).value; break;
            }
        }
        const auto b = batch_loss(kind, space, batch, w);
        EXPECT_NEAR(b.value, sum / 6.0, 1e-12) << to_string(kind);
        const auto serial = batch_loss_serial(kind, space, batch, w);
        EXPECT_EQ(b.value, serial.value);
        EXPECT_EQ(b.grad_scores, serial.grad_scores);
    }
}

TEST(Losses, Errors) {
    const StateSpace space(oracle::chain3());
    ObservedLabels bad;
    bad.set(0, false);
    bad.set(1, true);
    try {
        joint_likelihood_loss(space, std::vector<double>(3, 0.0), bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::infeasible_evidence);
    }
    EXPECT_THROW(TaskWeights({1.0, 0.0}), Error);
    EXPECT_THROW(TaskWeights({1.0, INFINITY}), Error);
    EXPECT_THROW(marginal_likelihood_loss(space, std::vector<double>(3, 0.0), ObservedLabels{}, TaskWeights::uniform(2, 1.0)),
                 Error);
    const auto empty = joint_likelihood_loss(space, std::vector<double>(3, 0.5), ObservedLabels{});
    EXPECT_EQ(empty.value, 0.0);
}

}  // namespace
}  // namespace hierlabel
