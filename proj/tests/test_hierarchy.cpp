// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "hierlabel/error.hpp"
#include "hierlabel/hierarchy.hpp"
#include "support/oracles.hpp"

namespace hierlabel {
namespace {

GraphConfigError::Reason reason_of(const std::string& text) {
    try {
        parse_graph(text);
    } catch (const GraphConfigError& e) {
        return e.reason();
    }
    ADD_FAILURE() << "config accepted:\n" << text;
    return GraphConfigError::Reason::syntax;
}

TEST(Hierarchy, ChainHasTwoLegalStates) {
    const LabelGraph g = oracle::chain3();
    const auto states = enumerate_legal(g);
    ASSERT_EQ(states.size(), 2u);
    EXPECT_EQ(states[0].to_string(), "000");
    EXPECT_EQ(states[1].to_string(), "111");
}

TEST(Hierarchy, DefaultGraphShape) {
    const LabelGraph g = default_graph();
    EXPECT_EQ(g.size(), 12u);
    EXPECT_EQ(g.count(Tier::root), 1u);
    EXPECT_EQ(g.count(Tier::attribute), 5u);
    EXPECT_EQ(g.count(Tier::region), 6u);
    for (const char* name : {"age", "expression", "gender", "identity", "pose"})
        EXPECT_EQ(g.node(*g.find(name)).tier, Tier::attribute) << name;
    for (const char* name : {"eye", "eyebrow", "lip", "mouth", "nose", "skin"})
        EXPECT_EQ(g.node(*g.find(name)).tier, Tier::region) << name;
}

TEST(Hierarchy, DefaultGraphHas1954States) {
    const LabelGraph g = default_graph();
    EXPECT_EQ(enumerate_legal_masks(g).size(), 1954u);
    EXPECT_EQ(oracle::legal_states(g).size(), 1u + 31u * 63u);
}

TEST(Hierarchy, EnumerationMatchesBruteForceOnRandomGraphs) {
    Rng rng(11);
    for (int t = 0; t < 100; ++t) {
        const LabelGraph g = oracle::random_graph(rng, 12);
        const auto expected = oracle::legal_states(g);
        EXPECT_EQ(enumerate_legal_masks(g), expected);
        EXPECT_EQ(enumerate_legal_masks_serial(g), expected);
        for (StateMask s = 0; s < (StateMask{1} << g.size()); ++s)
            ASSERT_EQ(is_legal_mask(g, s), oracle::legal(g, s));
    }
}

TEST(Hierarchy, ZeroLegalAndOrphanedBitsIllegal) {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        const LabelGraph g = oracle::random_graph(rng, 10);
        EXPECT_TRUE(is_legal_mask(g, 0));
        for (std::size_t i = 1; i < g.size(); ++i) EXPECT_FALSE(is_legal_mask(g, StateMask{1} << i));
        for (StateMask s : enumerate_legal_masks(g))
            if ((s & 1U) == 0) EXPECT_EQ(s, 0u);
    }
}

TEST(Hierarchy, IsLegalChecksSize) {
    const LabelGraph g = oracle::chain3();
    EXPECT_TRUE(is_legal(g, LabelState(3, 0b111)));
    EXPECT_FALSE(is_legal(g, LabelState(3, 0b011)));
    EXPECT_THROW(is_legal(g, LabelState(4, 0)), Error);
}

TEST(Hierarchy, EnumerationBudget) {
    std::vector<Node> nodes{{0, "r", Tier::root}};
    std::vector<Edge> edges;
    for (std::size_t i = 1; i <= kEnumerationBudget; ++i) {
        nodes.push_back({i, "a" + std::to_string(i), Tier::attribute});
        edges.push_back({0, i});
    }
    const LabelGraph g = LabelGraph::build(nodes, edges);
    try {
        enumerate_legal_masks(g);
        FAIL() << "25 nodes enumerated";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::capacity);
    }
}

TEST(Hierarchy, LabelStateText) {
    const std::vector<int> bits{1, 1, 0, 1};
    const LabelState s = LabelState::from_bits(bits);
    EXPECT_EQ(s.bits(), 0b1011u);
    EXPECT_EQ(s.to_string(), "1101");
    EXPECT_EQ(s.count(), 3u);
}

TEST(Hierarchy, ParserOrderInsensitive) {
    const LabelGraph a = parse_graph(
        "nodes:\n2 g region\n0 r root\n1 a attribute\nedges:\na -> g\nr -> a\n");
    const LabelGraph b = oracle::chain3();
    EXPECT_EQ(a.canonical_text(), b.canonical_text());
    EXPECT_EQ(a.hash(), b.hash());
}

TEST(Hierarchy, HashDistinguishesEdges) {
    const LabelGraph full = default_graph();
    std::string text(default_graph_config());
    text.erase(text.find("pose -> skin"), std::string("pose -> skin").size());
    EXPECT_NE(parse_graph(text).hash(), full.hash());
}

TEST(Hierarchy, ValidationReasons) {
    using R = GraphConfigError::Reason;
    EXPECT_EQ(reason_of("nodes:\n0 r root\n0 a attribute\nedges:\n"), R::duplicate_id);
    EXPECT_EQ(reason_of("nodes:\n0 r root\n1 r attribute\nedges:\nr -> r\n"), R::duplicate_name);
    EXPECT_EQ(reason_of("nodes:\n0 r root\n2 a attribute\nedges:\nr -> a\n"), R::sparse_ids);
    EXPECT_EQ(reason_of("nodes:\n0 r root\n1 a attribute\nedges:\nr -> b\n"), R::dangling_edge);
    EXPECT_EQ(reason_of("nodes:\n0 r root\n1 a attribute\nedges:\nr -> a\nr -> a\n"), R::duplicate_edge);
    EXPECT_EQ(reason_of("nodes:\n0 r root\n1 a attribute\n2 b attribute\nedges:\nr -> a\na -> b\nb -> a\n"), R::cycle);
    EXPECT_EQ(reason_of("nodes:\n0 r root\n1 a region\nedges:\nr -> a\n"), R::tier_violation);
    EXPECT_EQ(reason_of("nodes:\n0 r attribute\n1 a region\nedges:\nr -> a\n"), R::missing_root);
    EXPECT_EQ(reason_of("nodes:\n0 r root\n1 s root\nedges:\n"), R::multiple_roots);
    EXPECT_EQ(reason_of("nodes:\n0 r root\n1 a attribute\n2 g region\nedges:\nr -> a\n"), R::orphan);
    EXPECT_EQ(reason_of("nodes:\n0 r root\nedges:\nr => a\n"), R::syntax);
    EXPECT_EQ(reason_of("0 r root\n"), R::syntax);
    EXPECT_EQ(reason_of("nodes:\n0 r leaf\n"), R::syntax);
}

TEST(Hierarchy, ErrorsCarryLineNumbers) {
    try {
        parse_graph("# header\nnodes:\n0 r root\n1 a attribute\nedges:\nr -> a\nr -> zz\n");
        FAIL();
    } catch (const GraphConfigError& e) {
        EXPECT_EQ(e.reason(), GraphConfigError::Reason::dangling_edge);
        EXPECT_EQ(e.line(), 7u);
        EXPECT_EQ(e.kind(), ErrorKind::validation);
    }
}

TEST(Hierarchy, ShippedConfigMatchesEmbedded) {
    const auto path = std::filesystem::path(HIERLABEL_SOURCE_DIR) / "configs" / "ffsc_default.graph";
    EXPECT_EQ(load_graph(path.string()).hash(), default_graph().hash());
}

TEST(Hierarchy, MissingFileIsIoError) {
    try {
        load_graph("/nonexistent/graph.cfg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
        EXPECT_NE(std::string(e.what()).find("/nonexistent/graph.cfg"), std::string::npos);
    }
}

}  // namespace
}  // namespace hierlabel
