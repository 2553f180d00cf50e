// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hierlabel {

/// Bitmask over graph nodes: bit i is the label of node i.
using StateMask = std::uint64_t;

/// Hard width of a state mask.
inline constexpr std::size_t kMaxGraphNodes = 64;
/// Largest graph `enumerate_legal` accepts (2^24 candidate states).
inline constexpr std::size_t kEnumerationBudget = 24;

enum class Tier { root, attribute, region };

const char* to_string(Tier tier) noexcept;
std::optional<Tier> parse_tier(std::string_view text) noexcept;

struct Node {
    std::size_t id = 0;
    std::string name;
    Tier tier = Tier::root;
};

struct Edge {
    std::size_t parent = 0;
    std::size_t child = 0;
    auto operator<=>(const Edge&) const = default;
};

/// One full binary assignment over the nodes of a graph.
class LabelState {
public:
    LabelState() = default;
    LabelState(std::size_t size, StateMask bits);

    static LabelState from_bits(std::span<const int> bits);

    std::size_t size() const noexcept { return size_; }
    StateMask bits() const noexcept { return bits_; }
    bool operator[](std::size_t i) const noexcept { return ((bits_ >> i) & 1U) != 0; }
    void set(std::size_t i, bool value);
    std::size_t count() const noexcept;

    /// Node 0 first, e.g. "110" for a 3-node state with nodes 0 and 1 active.
    std::string to_string() const;

    friend bool operator==(const LabelState&, const LabelState&) = default;

private:
    std::size_t size_ = 0;
    StateMask bits_ = 0;
};

/// Partial assignment: nodes not present are unobserved.
class ObservedLabels {
public:
    ObservedLabels() = default;

    /// Every node of an `n`-node state observed.
    static ObservedLabels all_of(const LabelState& state);
    /// Observe the nodes of `state` selected by `observed_mask`; bits past the state's length are ignored.
    static ObservedLabels masked(const LabelState& state, StateMask observed_mask);

    void set(std::size_t node, bool value);
    void erase(std::size_t node);
    bool contains(std::size_t node) const noexcept { return node < kMaxGraphNodes && ((mask_ >> node) & 1U) != 0; }
    bool value(std::size_t node) const noexcept { return ((values_ >> node) & 1U) != 0; }
    std::size_t size() const noexcept;
    bool empty() const noexcept { return mask_ == 0; }

    StateMask mask() const noexcept { return mask_; }
    /// Observed values, zero outside `mask()`.
    StateMask values() const noexcept { return values_; }

    bool matches(StateMask state) const noexcept { return (state & mask_) == values_; }

    /// Ids of observed nodes in ascending order.
    std::vector<std::size_t> nodes() const;

    friend bool operator==(const ObservedLabels&, const ObservedLabels&) = default;

private:
    StateMask mask_ = 0;
    StateMask values_ = 0;
};

/// Acyclic root -> attribute -> region label hierarchy.
///
/// Invariants (enforced by `build` and `parse_graph`): node 0 is the unique root, ids are
/// dense, names unique, edges run root->attribute or attribute->region only, and every
/// non-root node has at least one parent.
class LabelGraph {
public:
    /// Validates and builds. Throws GraphConfigError.
    static LabelGraph build(std::vector<Node> nodes, std::vector<Edge> edges);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::span<const Node> nodes() const noexcept { return nodes_; }
    const Node& node(std::size_t id) const { return nodes_.at(id); }
    std::span<const Edge> edges() const noexcept { return edges_; }

    std::span<const std::size_t> parents(std::size_t id) const { return parents_.at(id); }
    std::span<const std::size_t> children(std::size_t id) const { return children_.at(id); }
    StateMask parent_mask(std::size_t id) const { return parent_masks_.at(id); }
    StateMask child_mask(std::size_t id) const { return child_masks_.at(id); }

    std::optional<std::size_t> find(std::string_view name) const noexcept;
    std::size_t count(Tier tier) const noexcept;
    std::vector<std::size_t> ids_of(Tier tier) const;

    /// Canonical config text: nodes by id, edges sorted by (parent id, child id).
    std::string canonical_text() const;
    /// FNV-1a 64 of `canonical_text()`.
    std::uint64_t hash() const;

private:
    LabelGraph() = default;

    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<StateMask> parent_masks_;
    std::vector<StateMask> child_masks_;
};

/// Parses the `nodes:` / `edges:` config format. Throws GraphConfigError with line context.
LabelGraph parse_graph(std::string_view config_text);

/// Reads and parses a config file. Throws Error(io) when the file cannot be read.
LabelGraph load_graph(const std::string& path);

/// Config text of the shipped 12-node face hierarchy (root, 5 attributes, 6 regions, every
/// attribute connected to every region).
std::string_view default_graph_config() noexcept;
LabelGraph default_graph();

/// True iff every active node with parents has an active parent and every active node
/// with children has an active child. Throws Error(dimension) on length mismatch.
bool is_legal(const LabelGraph& graph, const LabelState& state);
bool is_legal_mask(const LabelGraph& graph, StateMask state) noexcept;

/// All legal states in ascending bitmask order. Throws Error(capacity) above the budget.
std::vector<LabelState> enumerate_legal(const LabelGraph& graph);

/// Mask form of `enumerate_legal`; candidate ranges are scanned in parallel.
std::vector<StateMask> enumerate_legal_masks(const LabelGraph& graph);
/// Single-threaded reference for `enumerate_legal_masks`.
std::vector<StateMask> enumerate_legal_masks_serial(const LabelGraph& graph);

}  // namespace hierlabel
