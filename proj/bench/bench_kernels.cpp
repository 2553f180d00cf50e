// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "hierlabel/hierarchy.hpp"
#include "hierlabel/inference.hpp"
#include "hierlabel/losses.hpp"
#include "hierlabel/rng.hpp"

namespace {

using namespace hierlabel;

std::vector<ScoredExample> make_batch(const StateSpace& space, std::size_t k) {
    Rng rng(7);
    std::vector<ScoredExample> batch(k);
    for (auto& ex : batch) {
        ex.scores.resize(space.node_count());
        for (double& v : ex.scores) v = rng.uniform(-3.0, 3.0);
        ex.observed = ObservedLabels::masked(LabelState(space.node_count(), space.states()[rng.below(space.state_count())]),
                                             rng.next_u64());
    }
    return batch;
}

template <bool Parallel>
void BM_BatchLoss(benchmark::State& state) {
    const StateSpace space(default_graph());
    const auto batch = make_batch(space, static_cast<std::size_t>(state.range(0)));
    const auto w = TaskWeights::uniform(space.node_count(), 1.0);
    for (auto _ : state) {
        auto r = Parallel ? batch_loss(LossKind::marginal, space, batch, w) : batch_loss_serial(LossKind::marginal, space, batch, w);
        benchmark::DoNotOptimize(r.value);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchLoss<false>)->Name("batch_loss/serial")->Arg(32)->Arg(256);
BENCHMARK(BM_BatchLoss<true>)->Name("batch_loss/openmp")->Arg(32)->Arg(256);

LabelGraph wide_graph() {
    std::vector<Node> nodes{{0, "root", Tier::root}};
    std::vector<Edge> edges;
    for (std::size_t a = 1; a <= 8; ++a) {
        nodes.push_back({a, "a" + std::to_string(a), Tier::attribute});
        edges.push_back({0, a});
    }
    for (std::size_t r = 9; r < 22; ++r) {
        nodes.push_back({r, "r" + std::to_string(r), Tier::region});
        edges.push_back({1 + r % 8, r});
        edges.push_back({1 + (r + 3) % 8, r});
    }
    return LabelGraph::build(nodes, edges);
}

template <bool Parallel>
void BM_Enumerate(benchmark::State& state) {
    const LabelGraph g = wide_graph();
    for (auto _ : state) {
        auto masks = Parallel ? enumerate_legal_masks(g) : enumerate_legal_masks_serial(g);
        benchmark::DoNotOptimize(masks.data());
    }
}
BENCHMARK(BM_Enumerate<false>)->Name("enumerate/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Enumerate<true>)->Name("enumerate/openmp")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
