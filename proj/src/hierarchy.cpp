// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/hierarchy.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hierlabel/error.hpp"
#include "hierlabel/rng.hpp"

namespace hierlabel {

const char* to_string(Tier tier) noexcept {
    switch (tier) {
        case Tier::root: return "root";
        case Tier::attribute: return "attribute";
        case Tier::region: return "region";
    }
    return "?";
}

std::optional<Tier> parse_tier(std::string_view text) noexcept {
    if (text == "root") return Tier::root;
    if (text == "attribute") return Tier::attribute;
    if (text == "region") return Tier::region;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// LabelState / ObservedLabels

LabelState::LabelState(std::size_t size, StateMask bits) : size_(size), bits_(bits) {
    if (size > kMaxGraphNodes) throw Error(ErrorKind::capacity, "label state wider than 64 nodes");
    if (size < kMaxGraphNodes && (bits >> size) != 0)
        throw Error(ErrorKind::dimension, "label state has bits beyond its length");
}

LabelState LabelState::from_bits(std::span<const int> bits) {
    if (bits.size() > kMaxGraphNodes) throw Error(ErrorKind::capacity, "label state wider than 64 nodes");
    StateMask mask = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != 0 && bits[i] != 1)
            throw Error(ErrorKind::input, "label state values must be 0 or 1");
        if (bits[i] == 1) mask |= StateMask{1} << i;
    }
    return LabelState(bits.size(), mask);
}

void LabelState::set(std::size_t i, bool value) {
    if (i >= size_) throw Error(ErrorKind::dimension, "label index out of range");
    if (value)
        bits_ |= StateMask{1} << i;
    else
        bits_ &= ~(StateMask{1} << i);
}

std::size_t LabelState::count() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }

std::string LabelState::to_string() const {
    std::string out(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
        if ((*this)[i]) out[i] = '1';
    return out;
}

ObservedLabels ObservedLabels::all_of(const LabelState& state) {
    const StateMask full = state.size() == kMaxGraphNodes ? ~StateMask{0} : (StateMask{1} << state.size()) - 1;
    return masked(state, full);
}

ObservedLabels ObservedLabels::masked(const LabelState& state, StateMask observed_mask) {
    if (state.size() < kMaxGraphNodes) observed_mask &= (StateMask{1} << state.size()) - 1;
    ObservedLabels out;
    out.mask_ = observed_mask;
    out.values_ = state.bits() & observed_mask;
    return out;
}

void ObservedLabels::set(std::size_t node, bool value) {
    if (node >= kMaxGraphNodes) throw Error(ErrorKind::dimension, "observed node id out of range");
    const StateMask bit = StateMask{1} << node;
    mask_ |= bit;
    if (value)
        values_ |= bit;
    else
        values_ &= ~bit;
}

void ObservedLabels::erase(std::size_t node) {
    if (node >= kMaxGraphNodes) return;
    const StateMask bit = StateMask{1} << node;
    mask_ &= ~bit;
    values_ &= ~bit;
}

std::size_t ObservedLabels::size() const noexcept { return static_cast<std::size_t>(std::popcount(mask_)); }

std::vector<std::size_t> ObservedLabels::nodes() const {
    std::vector<std::size_t> out;
    for (StateMask m = mask_; m != 0; m &= m - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    return out;
}

// ---------------------------------------------------------------------------
// Graph construction and validation

namespace {

using Reason = GraphConfigError::Reason;

struct SourcedNode {
    Node node;
    std::size_t line = 0;
};

struct SourcedEdge {
    std::string parent;
    std::string child;
    std::size_t line = 0;
};

bool tier_edge_allowed(Tier parent, Tier child) {
    return (parent == Tier::root && child == Tier::attribute) ||
           (parent == Tier::attribute && child == Tier::region);
}

struct Validated {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
};

// Shared by `build` (no line info) and `parse_graph`.
Validated validate(std::vector<SourcedNode> nodes, const std::vector<SourcedEdge>& edges) {
    std::map<std::size_t, std::size_t> line_of_id;
    std::map<std::string, std::size_t, std::less<>> id_of_name;
    for (const auto& n : nodes) {
        if (!line_of_id.emplace(n.node.id, n.line).second)
            throw GraphConfigError(Reason::duplicate_id, n.line, "node id " + std::to_string(n.node.id) + " repeated");
        if (!id_of_name.emplace(n.node.name, n.node.id).second)
            throw GraphConfigError(Reason::duplicate_name, n.line, "node name '" + n.node.name + "' repeated");
    }
    if (nodes.empty()) throw GraphConfigError(Reason::missing_root, 0, "graph has no nodes");
    if (nodes.size() > kMaxGraphNodes)
        throw Error(ErrorKind::capacity, "graph has " + std::to_string(nodes.size()) + " nodes; the limit is 64");
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.node.id < b.node.id; });
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].node.id != i)
            throw GraphConfigError(Reason::sparse_ids, nodes[i].line,
                                   "expected node id " + std::to_string(i) + ", found " + std::to_string(nodes[i].node.id));

    const std::size_t n = nodes.size();
    std::vector<Edge> resolved;
    std::vector<std::size_t> edge_lines;
    std::set<Edge> seen;
    for (const auto& e : edges) {
        const auto p = id_of_name.find(e.parent);
        const auto c = id_of_name.find(e.child);
        if (p == id_of_name.end())
            throw GraphConfigError(Reason::dangling_edge, e.line, "unknown parent '" + e.parent + "'");
        if (c == id_of_name.end())
            throw GraphConfigError(Reason::dangling_edge, e.line, "unknown child '" + e.child + "'");
        const Edge edge{p->second, c->second};
        if (!seen.insert(edge).second)
            throw GraphConfigError(Reason::duplicate_edge, e.line, e.parent + " -> " + e.child + " repeated");
        resolved.push_back(edge);
        edge_lines.push_back(e.line);
    }

    // Cycle detection (iterative three-colour DFS) before tier checks, so a cyclic config is
    // reported as a cycle rather than as whichever edge breaks the tiers first.
    {
        std::vector<std::vector<std::size_t>> out_edges(n);
        for (std::size_t k = 0; k < resolved.size(); ++k) out_edges[resolved[k].parent].push_back(k);
        std::vector<int> colour(n, 0);
        for (std::size_t start = 0; start < n; ++start) {
            if (colour[start] != 0) continue;
            std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
            colour[start] = 1;
            while (!stack.empty()) {
                auto& [v, next] = stack.back();
                if (next == out_edges[v].size()) {
                    colour[v] = 2;
                    stack.pop_back();
                    continue;
                }
                const std::size_t k = out_edges[v][next++];
                const std::size_t w = resolved[k].child;
                if (colour[w] == 1)
                    throw GraphConfigError(Reason::cycle, edge_lines[k],
                                           "edge " + nodes[resolved[k].parent].node.name + " -> " +
                                               nodes[w].node.name + " closes a cycle");
                if (colour[w] == 0) {
                    colour[w] = 1;
                    stack.emplace_back(w, 0);
                }
            }
        }
    }

    std::size_t roots = 0;
    for (const auto& sn : nodes)
        if (sn.node.tier == Tier::root) ++roots;
    if (roots == 0) throw GraphConfigError(Reason::missing_root, 0, "no node has tier 'root'");
    if (roots > 1) throw GraphConfigError(Reason::multiple_roots, 0, std::to_string(roots) + " root nodes");
    if (nodes[0].node.tier != Tier::root)
        throw GraphConfigError(Reason::missing_root, nodes[0].line, "node 0 must be the root");

    for (std::size_t k = 0; k < resolved.size(); ++k) {
        const Node& p = nodes[resolved[k].parent].node;
        const Node& c = nodes[resolved[k].child].node;
        if (!tier_edge_allowed(p.tier, c.tier))
            throw GraphConfigError(Reason::tier_violation, edge_lines[k],
                                   p.name + " (" + to_string(p.tier) + ") -> " + c.name + " (" + to_string(c.tier) +
                                       ") is not a root->attribute or attribute->region edge");
    }

    std::vector<bool> has_parent(n, false);
    for (const auto& e : resolved) has_parent[e.child] = true;
    for (std::size_t i = 1; i < n; ++i)
        if (!has_parent[i])
            throw GraphConfigError(Reason::orphan, nodes[i].line, "node '" + nodes[i].node.name + "' has no parent");

    std::vector<Node> plain;
    plain.reserve(n);
    for (auto& sn : nodes) plain.push_back(std::move(sn.node));
    std::sort(resolved.begin(), resolved.end());
    return {std::move(plain), std::move(resolved)};
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

}  // namespace

LabelGraph LabelGraph::build(std::vector<Node> nodes, std::vector<Edge> edges) {
    std::vector<SourcedNode> sourced;
    sourced.reserve(nodes.size());
    for (auto& n : nodes) sourced.push_back({std::move(n), 0});
    std::vector<SourcedEdge> named;
    named.reserve(edges.size());
    for (const auto& e : edges) {
        auto name_of = [&](std::size_t id) -> std::string {
            for (const auto& s : sourced)
                if (s.node.id == id) return s.node.name;
            throw GraphConfigError(Reason::dangling_edge, 0, "edge references unknown node id " + std::to_string(id));
        };
        named.push_back({name_of(e.parent), name_of(e.child), 0});
    }
    auto valid = validate(std::move(sourced), named);
    LabelGraph g;
    const std::size_t n = valid.nodes.size();
    g.nodes_ = std::move(valid.nodes);
    g.edges_ = std::move(valid.edges);
    g.parents_.assign(n, {});
    g.children_.assign(n, {});
    g.parent_masks_.assign(n, 0);
    g.child_masks_.assign(n, 0);
    for (const auto& e : g.edges_) {
        g.parents_[e.child].push_back(e.parent);
        g.children_[e.parent].push_back(e.child);
        g.parent_masks_[e.child] |= StateMask{1} << e.parent;
        g.child_masks_[e.parent] |= StateMask{1} << e.child;
    }
    return g;
}

std::optional<std::size_t> LabelGraph::find(std::string_view name) const noexcept {
    for (const auto& n : nodes_)
        if (n.name == name) return n.id;
    return std::nullopt;
}

std::size_t LabelGraph::count(Tier tier) const noexcept {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.tier == tier; }));
}

std::vector<std::size_t> LabelGraph::ids_of(Tier tier) const {
    std::vector<std::size_t> out;
    for (const auto& n : nodes_)
        if (n.tier == tier) out.push_back(n.id);
    return out;
}

std::string LabelGraph::canonical_text() const {
    std::string out = "nodes:\n";
    for (const auto& n : nodes_) out += std::to_string(n.id) + " " + n.name + " " + to_string(n.tier) + "\n";
    out += "edges:\n";
    for (const auto& e : edges_) out += nodes_[e.parent].name + " -> " + nodes_[e.child].name + "\n";
    return out;
}

std::uint64_t LabelGraph::hash() const { return fnv1a64(canonical_text()); }

LabelGraph parse_graph(std::string_view config_text) {
    enum class Section { none, nodes, edges } section = Section::none;
    std::vector<SourcedNode> nodes;
    std::vector<SourcedEdge> edges;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= config_text.size()) {
        const auto eol = config_text.find('\n', pos);
        std::string_view line = config_text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? config_text.size() + 1 : eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line == "nodes:") {
            section = Section::nodes;
            continue;
        }
        if (line == "edges:") {
            section = Section::edges;
            continue;
        }
        const auto tokens = split_ws(line);
        if (section == Section::none)
            throw GraphConfigError(Reason::syntax, line_no, "content before a 'nodes:' or 'edges:' section");
        if (section == Section::nodes) {
            if (tokens.size() != 3)
                throw GraphConfigError(Reason::syntax, line_no, "expected '<id> <name> <tier>'");
            std::size_t id = 0;
            try {
                std::size_t used = 0;
                if (tokens[0].empty() || tokens[0][0] == '-') throw std::invalid_argument("negative");
                id = static_cast<std::size_t>(std::stoull(tokens[0], &used));
                if (used != tokens[0].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw GraphConfigError(Reason::syntax, line_no, "node id '" + tokens[0] + "' is not a non-negative integer");
            }
            const auto tier = parse_tier(tokens[2]);
            if (!tier)
                throw GraphConfigError(Reason::syntax, line_no, "unknown tier '" + tokens[2] + "' (root|attribute|region)");
            nodes.push_back({Node{id, tokens[1], *tier}, line_no});
        } else {
            if (tokens.size() != 3 || tokens[1] != "->")
                throw GraphConfigError(Reason::syntax, line_no, "expected '<parent_name> -> <child_name>'");
            edges.push_back({tokens[0], tokens[2], line_no});
        }
    }

    // Validate here so errors carry line numbers; build() then only assembles adjacency.
    auto valid = validate(std::move(nodes), edges);
    return LabelGraph::build(std::move(valid.nodes), std::move(valid.edges));
}

LabelGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read graph config '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_graph(text.str());
}

std::string_view default_graph_config() noexcept {
    return R"(# Face manipulation label hierarchy: real/fake root, five global attributes, six local
# regions. Every attribute connects to every region; replace the edge list to encode a
# sparser attribute->region relation.
nodes:
0 face root
1 age attribute
2 expression attribute
3 gender attribute
4 identity attribute
5 pose attribute
6 eye region
7 eyebrow region
8 lip region
9 mouth region
10 nose region
11 skin region
edges:
face -> age
face -> expression
face -> gender
face -> identity
face -> pose
age -> eye
age -> eyebrow
age -> lip
age -> mouth
age -> nose
age -> skin
expression -> eye
expression -> eyebrow
expression -> lip
expression -> mouth
expression -> nose
expression -> skin
gender -> eye
gender -> eyebrow
gender -> lip
gender -> mouth
gender -> nose
gender -> skin
identity -> eye
identity -> eyebrow
identity -> lip
identity -> mouth
identity -> nose
identity -> skin
pose -> eye
pose -> eyebrow
pose -> lip
pose -> mouth
pose -> nose
pose -> skin
)";
}

LabelGraph default_graph() { return parse_graph(default_graph_config()); }

// ---------------------------------------------------------------------------
// Legality and enumeration

bool is_legal_mask(const LabelGraph& graph, StateMask state) noexcept {
    for (StateMask m = state; m != 0; m &= m - 1) {
        const auto i = static_cast<std::size_t>(std::countr_zero(m));
        const StateMask parents = graph.parent_mask(i);
        if (parents != 0 && (state & parents) == 0) return false;
        const StateMask children = graph.child_mask(i);
        if (children != 0 && (state & children) == 0) return false;
    }
    return true;
}

bool is_legal(const LabelGraph& graph, const LabelState& state) {
    if (state.size() != graph.size())
        throw Error(ErrorKind::dimension, "state has " + std::to_string(state.size()) + " labels, graph has " +
                                              std::to_string(graph.size()) + " nodes");
    return is_legal_mask(graph, state.bits());
}

namespace {

void check_budget(const LabelGraph& graph) {
    if (graph.size() > kEnumerationBudget)
        throw Error(ErrorKind::capacity, "graph has " + std::to_string(graph.size()) +
                                             " nodes; exhaustive enumeration is limited to " +
                                             std::to_string(kEnumerationBudget));
}

}  // namespace

std::vector<StateMask> enumerate_legal_masks_serial(const LabelGraph& graph) {
    check_budget(graph);
    const StateMask end = StateMask{1} << graph.size();
    std::vector<StateMask> out;
    for (StateMask s = 0; s < end; ++s)
        if (is_legal_mask(graph, s)) out.push_back(s);
    return out;
}

std::vector<StateMask> enumerate_legal_masks(const LabelGraph& graph) {
    check_budget(graph);
    const StateMask end = StateMask{1} << graph.size();
    constexpr StateMask kChunk = StateMask{1} << 12;
    const auto chunks = static_cast<std::int64_t>((end + kChunk - 1) / kChunk);
    std::vector<std::vector<StateMask>> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const StateMask lo = static_cast<StateMask>(c) * kChunk;
        const StateMask hi = std::min(end, lo + kChunk);
        auto& part = parts[static_cast<std::size_t>(c)];
        for (StateMask s = lo; s < hi; ++s)
            if (is_legal_mask(graph, s)) part.push_back(s);
    }
    std::vector<StateMask> out;
    for (const auto& part : parts) out.insert(out.end(), part.begin(), part.end());
    return out;
}

std::vector<LabelState> enumerate_legal(const LabelGraph& graph) {
    const auto masks = enumerate_legal_masks(graph);
    std::vector<LabelState> out;
    out.reserve(masks.size());
    for (StateMask m : masks) out.emplace_back(graph.size(), m);
    return out;
}

}  // namespace hierlabel
