// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

// The OpenMP kernels must agree bit for bit with their serial references at any thread
// count, and generation must not depend on the thread count.
#include <gtest/gtest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hierlabel/losses.hpp"
#include "hierlabel/synthdata.hpp"
#include "support/oracles.hpp"

namespace hierlabel {
namespace {

class ThreadCounts : public ::testing::TestWithParam<int> {
protected:
    void SetUp() override {
#ifdef _OPENMP
        saved_ = omp_get_max_threads();
        omp_set_num_threads(GetParam());
#endif
    }
    void TearDown() override {
#ifdef _OPENMP
        omp_set_num_threads(saved_);
#endif
    }
    int saved_ = 1;
};

TEST_P(ThreadCounts, EnumerationMatchesSerial) {
    Rng rng(71);
    for (int t = 0; t < 20; ++t) {
        const LabelGraph g = oracle::random_graph(rng, 18);
        EXPECT_EQ(enumerate_legal_masks(g), enumerate_legal_masks_serial(g));
    }
}

TEST_P(ThreadCounts, BatchLossMatchesSerial) {
    const StateSpace space(default_graph());
    Rng rng(72);
    std::vector<ScoredExample> batch(37);
    for (auto& ex : batch) {
        ex.scores.resize(12);
        for (double& v : ex.scores) v = rng.uniform(-3, 3);
        const StateMask truth = space.states()[rng.below(space.state_count())];
        ex.observed = ObservedLabels::masked(LabelState(12, truth), rng.next_u64());
    }
    const auto w = TaskWeights::uniform(12, 0.4);
    for (LossKind kind : {LossKind::joint, LossKind::marginal, LossKind::independent}) {
        const auto par = batch_loss(kind, space, batch, w);
        const auto ser = batch_loss_serial(kind, space, batch, w);
        EXPECT_EQ(par.value, ser.value);
        EXPECT_EQ(par.grad_scores, ser.grad_scores);
    }
}

TEST_P(ThreadCounts, GenerationIndependentOfThreads) {
    const Scenario sc = default_ffsc_scenario(6);
    static const auto reference = generate(sc, 64, 8, 13);
    EXPECT_EQ(generate(sc, 64, 8, 13), reference);
}

INSTANTIATE_TEST_SUITE_P(Parallel, ThreadCounts, ::testing::Values(1, 2, 3, 8));

TEST(Parallel, BatchErrorsPropagate) {
    const StateSpace space(oracle::chain3());
    std::vector<ScoredExample> batch(5, ScoredExample{{0.0, 0.0, 0.0}, {}});
    batch[3].observed.set(0, true);
    batch[3].observed.set(2, false);
    EXPECT_THROW(batch_loss(LossKind::joint, space, batch, TaskWeights::uniform(3, 1.0)), Error);
}

}  // namespace
}  // namespace hierlabel
