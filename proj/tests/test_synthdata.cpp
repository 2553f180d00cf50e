// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "hierlabel/bilevel.hpp"
#include "hierlabel/error.hpp"
#include "hierlabel/eval.hpp"
#include "hierlabel/synthdata.hpp"
#include "support/oracles.hpp"

namespace hierlabel {
namespace {

std::set<std::uint64_t> identities(std::span<const SyntheticSample> s, std::span<const std::size_t> idx) {
    std::set<std::uint64_t> out;
    for (std::size_t i : idx) out.insert(s[i].identity_id);
    return out;
}

bool disjoint(const std::set<std::uint64_t>& a, const std::set<std::uint64_t>& b) {
    return std::none_of(a.begin(), a.end(), [&](std::uint64_t x) { return b.count(x) > 0; });
}

TEST(Synthdata, DefaultScenarioShape) {
    const Scenario sc = default_ffsc_scenario();
    EXPECT_NO_THROW(sc.validate());
    EXPECT_EQ(sc.methods.size(), 12u);
    const LabelGraph& g = sc.graph;
    for (std::size_t a : g.ids_of(Tier::attribute)) {
        std::size_t count = 0;
        for (const auto& m : sc.methods)
            if (std::find(m.target_nodes.begin(), m.target_nodes.end(), a) != m.target_nodes.end()) ++count;
        EXPECT_GE(count, 2u) << g.node(a).name;
    }
    const std::size_t age = *g.find("age");
    for (const auto& m : sc.methods) {
        EXPECT_TRUE(is_legal(g, sc.method_state(m))) << m.name;
        const bool gender_or_identity = std::any_of(m.target_nodes.begin(), m.target_nodes.end(), [&](std::size_t i) {
            return i == *g.find("gender") || i == *g.find("identity");
        });
        if (gender_or_identity) EXPECT_EQ(sc.method_observed_mask(m) & (StateMask{1} << age), 0u) << m.name;
    }
}

TEST(Synthdata, SamplesAreLegalAndConsistent) {
    const Scenario sc = default_ffsc_scenario();
    const auto samples = generate(sc, 100, 50, 3);
    ASSERT_EQ(samples.size(), 100u + 600u);
    std::size_t reals = 0;
    for (const auto& s : samples) {
        ASSERT_TRUE(is_legal(sc.graph, s.state));
        ASSERT_TRUE(s.observed.matches(s.state.bits()));
        ASSERT_EQ(s.features.size(), sc.feature_dim);
        if (s.method_id == 0) {
            ++reals;
            EXPECT_EQ(s.state.bits(), 0u);
            EXPECT_EQ(s.observed.size(), sc.graph.size());
        } else {
            EXPECT_EQ(s.observed.mask(), sc.method_observed_mask(*sc.find_method(s.method_id)));
        }
    }
    EXPECT_EQ(reals, 100u);
}

TEST(Synthdata, SeededDeterminism) {
    const Scenario sc = default_ffsc_scenario();
    Dataset a{12, 32, sc.graph.hash(), 9, generate(sc, 50, 5, 9)};
    Dataset b{12, 32, sc.graph.hash(), 9, generate(sc, 50, 5, 9)};
    EXPECT_EQ(encode_dataset(a), encode_dataset(b));
    EXPECT_NE(generate(sc, 50, 5, 10), a.samples);
}

TEST(Synthdata, SplitsKeepIdentitiesDisjoint) {
    const Scenario sc = default_ffsc_scenario(8);
    const auto samples = generate(sc, 200, 20, 4);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (Protocol p : {Protocol::intra, Protocol::p1, Protocol::p2}) {
            SplitRequest req;
            req.protocol = p;
            req.seed = seed;
            req.held_out_methods = {1, 12};
            req.held_out_attribute = 1 + seed % 5;
            const auto plan = make_split(samples, req);
            const auto tr = identities(samples, plan.train), va = identities(samples, plan.val), te = identities(samples, plan.test);
            EXPECT_TRUE(disjoint(tr, va));
            EXPECT_TRUE(disjoint(tr, te));
            EXPECT_TRUE(disjoint(va, te));
            EXPECT_FALSE(va.empty());
            EXPECT_FALSE(te.empty());
        }
    }
}

TEST(Synthdata, DefaultRatiosGiveTrainFraction) {
    const Scenario sc = default_ffsc_scenario(4);
    const auto samples = generate(sc, 1000, 0, 1);
    const auto plan = make_split(samples, SplitRequest{});
    EXPECT_EQ(plan.train.size(), 780u);
    EXPECT_EQ(plan.val.size(), 110u);
    EXPECT_EQ(plan.test.size(), 110u);
}

TEST(Synthdata, ProtocolFilters) {
    const Scenario sc = default_ffsc_scenario(8);
    const auto samples = generate(sc, 200, 20, 5);
    SplitRequest p1;
    p1.protocol = Protocol::p1;
    p1.held_out_methods = {4};
    const auto plan1 = make_split(samples, p1);
    bool test_has_method = false;
    for (std::size_t i : plan1.train) EXPECT_NE(samples[i].method_id, 4u);
    for (std::size_t i : plan1.test) test_has_method = test_has_method || samples[i].method_id == 4;
    EXPECT_TRUE(test_has_method);

    const std::size_t pose = *sc.graph.find("pose");
    SplitRequest p2;
    p2.protocol = Protocol::p2;
    p2.held_out_attribute = pose;
    const auto plan2 = make_split(samples, p2);
    for (std::size_t i : plan2.train) EXPECT_FALSE(samples[i].state[pose]);
    const auto cells = default_cells(sc.graph, samples, plan2);
    const auto it = std::find_if(cells.begin(), cells.end(), [](const CellSpec& c) { return c.name == "pose"; });
    ASSERT_NE(it, cells.end());
    EXPECT_TRUE(std::any_of(it->indices.begin(), it->indices.end(), [&](std::size_t i) { return samples[i].state[pose]; }));

    p2.held_out_attribute.reset();
    EXPECT_THROW(make_split(samples, p2), Error);
    p1.held_out_methods = {99};
    EXPECT_THROW(make_split(samples, p1), Error);
}

TEST(Synthdata, TooFewIdentities) {
    const auto samples = generate(default_ffsc_scenario(4), 2, 1, 1);
    try {
        make_split(samples, SplitRequest{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::capacity);
    }
}

TEST(Synthdata, ScenarioValidationNamesMethod) {
    Scenario sc = default_ffsc_scenario(8);
    sc.methods[3].target_nodes = {0, *sc.graph.find("eye")};  // region without its attribute
    try {
        sc.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
        EXPECT_NE(std::string(e.what()).find(sc.methods[3].name), std::string::npos);
    }
    sc = default_ffsc_scenario(8);
    sc.methods[0].unobserved_nodes.push_back(sc.methods[0].target_nodes.back());
    EXPECT_THROW(sc.validate(), Error);
}

TEST(Synthdata, ScenarioJsonRoundTrip) {
    const Scenario sc = default_ffsc_scenario(6);
    const Scenario back = parse_scenario(scenario_to_json(sc));
    EXPECT_EQ(back.graph.hash(), sc.graph.hash());
    EXPECT_EQ(generate(back, 20, 3, 7), generate(sc, 20, 3, 7));
}

TEST(Synthdata, DatasetRoundTripAndCorruption) {
    const Scenario sc = default_ffsc_scenario(5);
    const Dataset ds{12, 5, sc.graph.hash(), 3, generate(sc, 10, 2, 3)};
    const std::string bytes = encode_dataset(ds);
    EXPECT_EQ(decode_dataset(bytes), ds);
    EXPECT_THROW(decode_dataset(bytes.substr(0, bytes.size() - 3)), Error);
    EXPECT_THROW(decode_dataset(bytes + "x"), Error);
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_dataset(bad), Error);
    const std::string text = dataset_to_text(ds);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2 + static_cast<long>(ds.samples.size()));
}

// Best linear-scorer training AUC on the root, for one noise level.
double training_auc(double noise, std::uint64_t seed) {
    Scenario sc = default_ffsc_scenario(8);
    sc.real_noise_sigma = noise;
    for (auto& m : sc.methods) m.noise_sigma = noise;
    const auto samples = generate(sc, 120, 10, seed);
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const StateSpace space(sc.graph);
    BilevelConfig cfg;
    cfg.epochs = 80;
    cfg.batch_size = 20;
    cfg.seed = seed;
    const auto r = train_baseline(Strategy::independent, space, to_examples(samples, all), cfg,
                                  ScorerParams::zeros(Architecture::linear, 8, 0, 12));
    std::vector<int> labels;
    for (const auto& s : samples) labels.push_back(s.state[0] ? 1 : 0);
    return auc(primary_predictions(space, r.params, PredictionHead::independent, samples, all), labels);
}

TEST(Synthdata, MoreNoiseNeverHelps) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        double previous = 101.0;
        for (double noise : {0.0, 0.5, 1.0, 2.0, 4.0}) {
            const double a = training_auc(noise, seed);
            EXPECT_LE(a, previous + 0.5) << "noise " << noise << " seed " << seed;
            previous = a;
        }
    }
}

}  // namespace
}  // namespace hierlabel
