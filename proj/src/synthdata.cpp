// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "hierlabel/binary_io.hpp"
#include "hierlabel/error.hpp"
#include "hierlabel/rng.hpp"

namespace hierlabel {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Scenario

void Scenario::validate() const {
    const std::size_t n = graph.size();
    if (feature_dim == 0) throw Error(ErrorKind::config, "scenario feature_dim must be >= 1");
    if (node_signatures.size() != n) throw Error(ErrorKind::config, "scenario needs one signature per node");
    for (const auto& s : node_signatures)
        if (s.size() != feature_dim) throw Error(ErrorKind::config, "node signature length differs from feature_dim");
    if (!(identity_sigma >= 0.0) || !(real_noise_sigma >= 0.0) || !(unobserved_signature_scale >= 0.0))
        throw Error(ErrorKind::config, "scenario noise scales must be >= 0");
    std::set<std::uint32_t> ids;
    for (const auto& m : methods) {
        const std::string who = "method '" + m.name + "' (id " + std::to_string(m.method_id) + ")";
        if (m.method_id == 0) throw Error(ErrorKind::config, who + ": id 0 is reserved for real samples");
        if (!ids.insert(m.method_id).second) throw Error(ErrorKind::config, who + ": duplicate method id");
        if (m.signature.size() != feature_dim) throw Error(ErrorKind::config, who + ": signature length differs from feature_dim");
        if (!(m.noise_sigma >= 0.0) || !std::isfinite(m.noise_sigma)) throw Error(ErrorKind::config, who + ": noise_sigma must be >= 0");
        for (std::size_t i : m.target_nodes)
            if (i >= n) throw Error(ErrorKind::config, who + ": target node out of range");
        for (std::size_t i : m.unobserved_nodes) {
            if (i >= n) throw Error(ErrorKind::config, who + ": unobserved node out of range");
            if (std::find(m.target_nodes.begin(), m.target_nodes.end(), i) != m.target_nodes.end())
                throw Error(ErrorKind::config, who + ": targeted node '" + graph.node(i).name + "' cannot be unobserved");
        }
        const LabelState state = method_state(m);
        if (state.bits() == 0 || !is_legal(graph, state))
            throw Error(ErrorKind::config, who + ": induced label state " + state.to_string() + " is illegal");
    }
}

LabelState Scenario::method_state(const MethodSpec& method) const {
    LabelState s(graph.size(), 0);
    for (std::size_t i : method.target_nodes) s.set(i, true);
    return s;
}

StateMask Scenario::method_observed_mask(const MethodSpec& method) const {
    StateMask mask = graph.size() == kMaxGraphNodes ? ~StateMask{0} : (StateMask{1} << graph.size()) - 1;
    for (std::size_t i : method.unobserved_nodes) mask &= ~(StateMask{1} << i);
    return mask;
}

const MethodSpec* Scenario::find_method(std::uint32_t method_id) const noexcept {
    for (const auto& m : methods)
        if (m.method_id == method_id) return &m;
    return nullptr;
}

namespace {

std::vector<double> random_direction(Rng& rng, std::size_t dim, double norm) {
    std::vector<double> v(dim);
    double s = 0.0;
    for (double& x : v) {
        x = rng.normal();
        s += x * x;
    }
    const double scale = s > 0.0 ? norm / std::sqrt(s) : 0.0;
    for (double& x : v) x *= scale;
    return v;
}

struct SignatureNorms {
    double root = 0.6;
    double attribute = 2.0;
    double region = 1.6;
    double method = 1.2;
};

std::vector<std::vector<double>> draw_node_signatures(const LabelGraph& graph, std::size_t dim, std::uint64_t seed,
                                                      const SignatureNorms& norms) {
    std::vector<std::vector<double>> out;
    for (const auto& node : graph.nodes()) {
        Rng rng(derive_seed(derive_seed(seed, "node-signature"), node.id));
        const double norm = node.tier == Tier::root ? norms.root : node.tier == Tier::attribute ? norms.attribute : norms.region;
        out.push_back(random_direction(rng, dim, norm));
    }
    return out;
}

std::vector<double> draw_method_signature(std::uint32_t method_id, std::size_t dim, std::uint64_t seed, double norm) {
    Rng rng(derive_seed(derive_seed(seed, "method-signature"), method_id));
    return random_direction(rng, dim, norm);
}

constexpr std::uint64_t kDefaultSignatureSeed = 20240917;

}  // namespace

Scenario default_ffsc_scenario(std::size_t feature_dim) {
    Scenario sc{default_graph(), {}, feature_dim, {}, 1.0, 0.6, 0.5};
    const SignatureNorms norms;
    sc.node_signatures = draw_node_signatures(sc.graph, feature_dim, kDefaultSignatureSeed, norms);
    struct Row {
        const char* name;
        std::vector<const char*> targets;
        std::vector<const char*> unobserved;
    };
    const std::vector<Row> rows = {
        {"age_progression", {"face", "age", "eye", "skin"}, {}},
        {"age_regression", {"face", "age", "skin", "mouth"}, {}},
        {"age_style", {"face", "age", "eyebrow", "skin", "nose"}, {"expression"}},
        {"expression_reenact", {"face", "expression", "mouth", "lip"}, {}},
        {"expression_edit", {"face", "expression", "eye", "eyebrow", "mouth"}, {}},
        {"expression_talking", {"face", "expression", "mouth", "lip", "skin"}, {"pose"}},
        {"gender_swap", {"face", "gender", "eyebrow", "lip", "skin"}, {"age"}},
        {"gender_style", {"face", "gender", "lip", "nose", "skin"}, {"age"}},
        {"identity_swap", {"face", "identity", "eye", "nose", "mouth"}, {"age"}},
        {"identity_blend", {"face", "identity", "eye", "eyebrow", "nose", "lip", "skin"}, {"age", "gender"}},
        {"pose_rotate", {"face", "pose", "nose", "skin"}, {"expression"}},
        {"pose_reenact", {"face", "pose", "eye", "nose", "mouth"}, {}},
    };
    std::uint32_t id = 1;
    for (const auto& row : rows) {
        MethodSpec m;
        m.method_id = id;
        m.name = row.name;
        for (const char* t : row.targets) m.target_nodes.push_back(*sc.graph.find(t));
        for (const char* u : row.unobserved) m.unobserved_nodes.push_back(*sc.graph.find(u));
        m.signature = draw_method_signature(id, feature_dim, kDefaultSignatureSeed, norms.method);
        m.noise_sigma = 0.6;
        sc.methods.push_back(std::move(m));
        ++id;
    }
    sc.validate();
    return sc;
}

Scenario parse_scenario(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, std::string("scenario: ") + e.what());
    }
    try {
        const LabelGraph graph =
            doc.contains("graph") ? parse_graph(doc.at("graph").get<std::string>()) : default_graph();
        Scenario sc{graph, {}, doc.value("feature_dim", std::size_t{32}), {}, doc.value("identity_sigma", 1.0),
                    doc.value("real_noise_sigma", 0.6), doc.value("unobserved_signature_scale", 0.5)};
        const std::uint64_t sig_seed = doc.value("signature_seed", kDefaultSignatureSeed);
        SignatureNorms norms;
        if (doc.contains("signature_norms")) {
            const auto& sn = doc.at("signature_norms");
            norms.root = sn.value("root", norms.root);
            norms.attribute = sn.value("attribute", norms.attribute);
            norms.region = sn.value("region", norms.region);
            norms.method = sn.value("method", norms.method);
        }
        sc.node_signatures = draw_node_signatures(sc.graph, sc.feature_dim, sig_seed, norms);
        if (doc.contains("node_signatures")) {
            for (const auto& [name, vec] : doc.at("node_signatures").items()) {
                const auto id = sc.graph.find(name);
                if (!id) throw Error(ErrorKind::config, "scenario: signature for unknown node '" + name + "'");
                sc.node_signatures[*id] = vec.get<std::vector<double>>();
            }
        }
        auto resolve = [&](const json& names, const std::string& method) {
            std::vector<std::size_t> out;
            for (const auto& n : names) {
                const auto id = sc.graph.find(n.get<std::string>());
                if (!id) throw Error(ErrorKind::config, "scenario: method '" + method + "' references unknown node '" +
                                                            n.get<std::string>() + "'");
                out.push_back(*id);
            }
            return out;
        };
        for (const auto& jm : doc.at("methods")) {
            MethodSpec m;
            m.method_id = jm.at("id").get<std::uint32_t>();
            m.name = jm.value("name", "method_" + std::to_string(m.method_id));
            m.target_nodes = resolve(jm.at("targets"), m.name);
            if (jm.contains("unobserved")) m.unobserved_nodes = resolve(jm.at("unobserved"), m.name);
            m.signature = jm.contains("signature") ? jm.at("signature").get<std::vector<double>>()
                                                   : draw_method_signature(m.method_id, sc.feature_dim, sig_seed, norms.method);
            m.noise_sigma = jm.value("noise_sigma", 0.6);
            sc.methods.push_back(std::move(m));
        }
        sc.validate();
        return sc;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("scenario: ") + e.what());
    }
}

std::string scenario_to_json(const Scenario& sc) {
    json doc;
    doc["graph"] = sc.graph.canonical_text();
    doc["feature_dim"] = sc.feature_dim;
    doc["identity_sigma"] = sc.identity_sigma;
    doc["real_noise_sigma"] = sc.real_noise_sigma;
    doc["unobserved_signature_scale"] = sc.unobserved_signature_scale;
    json sigs = json::object();
    for (const auto& node : sc.graph.nodes()) sigs[node.name] = sc.node_signatures[node.id];
    doc["node_signatures"] = sigs;
    json methods = json::array();
    for (const auto& m : sc.methods) {
        json jm;
        jm["id"] = m.method_id;
        jm["name"] = m.name;
        json targets = json::array();
        for (std::size_t i : m.target_nodes) targets.push_back(sc.graph.node(i).name);
        json unobserved = json::array();
        for (std::size_t i : m.unobserved_nodes) unobserved.push_back(sc.graph.node(i).name);
        jm["targets"] = targets;
        jm["unobserved"] = unobserved;
        jm["signature"] = m.signature;
        jm["noise_sigma"] = m.noise_sigma;
        methods.push_back(jm);
    }
    doc["methods"] = methods;
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Generation

std::vector<SyntheticSample> generate(const Scenario& sc, std::size_t n_real, std::size_t n_fake_per_method,
                                      std::uint64_t seed) {
    sc.validate();
    if (n_real == 0) throw Error(ErrorKind::input, "need at least one real sample (identities derive from them)");
    const std::size_t d = sc.feature_dim;
    const std::size_t n = sc.graph.size();
    const std::size_t n_methods = sc.methods.size();
    const std::size_t total = n_real + n_methods * n_fake_per_method;
    const std::uint64_t id_seed = derive_seed(seed, "identity");
    const std::uint64_t sample_seed = derive_seed(seed, "sample");

    auto identity_base = [&](std::uint64_t identity) {
        Rng rng(derive_seed(id_seed, identity));
        std::vector<double> b(d);
        for (double& x : b) x = rng.normal(0.0, sc.identity_sigma);
        return b;
    };

    std::vector<SyntheticSample> out(total);
    std::vector<std::exception_ptr> failures(total);
    const auto count = static_cast<std::int64_t>(total);
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        try {
            SyntheticSample& s = out[idx];
            Rng rng(derive_seed(sample_seed, idx));
            if (idx < n_real) {
                s.identity_id = idx;
                s.method_id = 0;
                s.state = LabelState(n, 0);
                s.observed = ObservedLabels::all_of(s.state);
                s.features = identity_base(s.identity_id);
                for (double& x : s.features) x += rng.normal(0.0, sc.real_noise_sigma);
                continue;
            }
            const std::size_t f = idx - n_real;
            const std::size_t mi = f / n_fake_per_method;
            const std::size_t j = f % n_fake_per_method;
            const MethodSpec& m = sc.methods[mi];
            // Method mi starts at its own offset and walks consecutive identities, so every
            // method reaches min(n_fake_per_method, n_real) distinct identities.
            s.identity_id = (mi * n_real / n_methods + j) % n_real;
            s.method_id = m.method_id;
            s.state = sc.method_state(m);
            s.observed = ObservedLabels::masked(s.state, sc.method_observed_mask(m));
            s.features = identity_base(s.identity_id);
            for (std::size_t i : m.target_nodes)
                for (std::size_t c = 0; c < d; ++c) s.features[c] += sc.node_signatures[i][c];
            for (std::size_t i : m.unobserved_nodes)
                for (std::size_t c = 0; c < d; ++c) s.features[c] += sc.unobserved_signature_scale * sc.node_signatures[i][c];
            for (std::size_t c = 0; c < d; ++c) s.features[c] += m.signature[c] + rng.normal(0.0, m.noise_sigma);
        } catch (...) {
            failures[idx] = std::current_exception();
        }
    }
    for (const auto& e : failures)
        if (e) std::rethrow_exception(e);
    return out;
}

// ---------------------------------------------------------------------------
// Splits

const char* to_string(Protocol protocol) noexcept {
    switch (protocol) {
        case Protocol::intra: return "intra";
        case Protocol::p1: return "p1";
        case Protocol::p2: return "p2";
    }
    return "?";
}

std::optional<Protocol> parse_protocol(std::string_view text) noexcept {
    if (text == "intra") return Protocol::intra;
    if (text == "p1" || text == "protocol1") return Protocol::p1;
    if (text == "p2" || text == "protocol2") return Protocol::p2;
    return std::nullopt;
}

SplitPlan make_split(std::span<const SyntheticSample> samples, const SplitRequest& request) {
    for (double r : request.ratios)
        if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::config, "split ratios must be positive");
    const double ratio_sum = request.ratios[0] + request.ratios[1] + request.ratios[2];

    SplitPlan plan;
    plan.protocol = request.protocol;
    std::set<std::uint32_t> held_methods;
    if (request.protocol == Protocol::p1) {
        if (request.held_out_methods.empty()) throw Error(ErrorKind::config, "protocol p1 needs held-out methods");
        held_methods.insert(request.held_out_methods.begin(), request.held_out_methods.end());
        plan.held_out_methods.assign(held_methods.begin(), held_methods.end());
        // Each held-out method's attributes must still be seen through some other method.
        std::map<std::uint32_t, StateMask> state_of;
        for (const auto& s : samples)
            if (s.method_id != 0) state_of[s.method_id] = s.state.bits();
        StateMask kept = 0;
        for (const auto& [id, bits] : state_of)
            if (!held_methods.count(id)) kept |= bits;
        for (std::uint32_t id : held_methods) {
            const auto it = state_of.find(id);
            if (it == state_of.end()) throw Error(ErrorKind::config, "held-out method " + std::to_string(id) + " has no samples");
            if ((it->second & ~kept & ~StateMask{1}) != 0)
                throw Error(ErrorKind::config, "held-out method " + std::to_string(id) +
                                                   " manipulates labels no training method covers; use protocol p2");
        }
    } else if (request.protocol == Protocol::p2) {
        if (!request.held_out_attribute || *request.held_out_attribute == 0)
            throw Error(ErrorKind::config, "protocol p2 needs a held-out attribute node");
        plan.held_out_attribute = request.held_out_attribute;
    }

    std::vector<std::uint64_t> identities;
    for (const auto& s : samples) identities.push_back(s.identity_id);
    std::sort(identities.begin(), identities.end());
    identities.erase(std::unique(identities.begin(), identities.end()), identities.end());
    if (identities.size() < 3)
        throw Error(ErrorKind::capacity, "need at least 3 identities for disjoint train/val/test, have " +
                                             std::to_string(identities.size()));
    Rng rng(derive_seed(request.seed, "split"));
    rng.shuffle(std::span<std::uint64_t>(identities));

    const std::size_t count = identities.size();
    auto share = [&](double r) { return static_cast<std::size_t>(std::llround(r / ratio_sum * static_cast<double>(count))); };
    std::size_t n_val = std::max<std::size_t>(1, share(request.ratios[1]));
    std::size_t n_test = std::max<std::size_t>(1, share(request.ratios[2]));
    while (n_val + n_test > count - 1) {
        if (n_val >= n_test && n_val > 1)
            --n_val;
        else if (n_test > 1)
            --n_test;
        else
            break;
    }
    std::map<std::uint64_t, int> part;
    for (std::size_t k = 0; k < count; ++k) part[identities[k]] = k < count - n_val - n_test ? 0 : k < count - n_test ? 1 : 2;

    for (std::size_t idx = 0; idx < samples.size(); ++idx) {
        const auto& s = samples[idx];
        switch (part[s.identity_id]) {
            case 0: {
                const bool held = (request.protocol == Protocol::p1 && held_methods.count(s.method_id)) ||
                                  (request.protocol == Protocol::p2 && s.state.size() > *request.held_out_attribute &&
                                   s.state[*request.held_out_attribute]);
                if (!held) plan.train.push_back(idx);
                break;
            }
            case 1: plan.val.push_back(idx); break;
            default: plan.test.push_back(idx); break;
        }
    }
    return plan;
}

std::vector<Example> to_examples(std::span<const SyntheticSample> samples, std::span<const std::size_t> indices) {
    std::vector<Example> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back({samples[i].features, samples[i].observed});
    return out;
}

// ---------------------------------------------------------------------------
// Dataset files

std::string encode_dataset(const Dataset& ds) {
    if (ds.node_count == 0 || ds.node_count > 32) throw Error(ErrorKind::capacity, "dataset files hold at most 32 labels");
    ByteWriter w;
    w.bytes(Dataset::kMagic);
    w.u32(Dataset::kVersion);
    w.u64(ds.node_count);
    w.u64(ds.feature_dim);
    w.u64(ds.samples.size());
    w.u64(ds.graph_hash);
    w.u64(ds.seed);
    for (const auto& s : ds.samples) {
        if (s.features.size() != ds.feature_dim || s.state.size() != ds.node_count)
            throw Error(ErrorKind::dimension, "sample dimensions differ from the dataset header");
        w.u64(s.identity_id);
        w.u32(s.method_id);
        w.u32(static_cast<std::uint32_t>(s.state.bits()));
        w.u32(static_cast<std::uint32_t>(s.observed.mask()));
        w.f64s(s.features);
    }
    return w.data();
}

Dataset decode_dataset(std::string_view bytes, const std::string& source) {
    ByteReader r(bytes, source);
    if (r.bytes(Dataset::kMagic.size()) != Dataset::kMagic) throw Error(ErrorKind::io, source + ": not a dataset file");
    if (const auto v = r.u32(); v != Dataset::kVersion)
        throw Error(ErrorKind::io, source + ": unsupported dataset version " + std::to_string(v));
    Dataset ds;
    ds.node_count = static_cast<std::size_t>(r.u64());
    ds.feature_dim = static_cast<std::size_t>(r.u64());
    const auto count = r.u64();
    ds.graph_hash = r.u64();
    ds.seed = r.u64();
    if (ds.node_count == 0 || ds.node_count > 32 || ds.feature_dim == 0 || ds.feature_dim > (1U << 20))
        throw Error(ErrorKind::io, source + ": implausible dimensions");
    const std::uint64_t record = 8 + 4 + 4 + 4 + 8 * ds.feature_dim;
    if (count > (bytes.size() / record) + 1) throw Error(ErrorKind::io, source + ": sample count exceeds file size");
    ds.samples.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t k = 0; k < count; ++k) {
        SyntheticSample s;
        s.identity_id = r.u64();
        s.method_id = r.u32();
        const StateMask state = r.u32();
        const StateMask mask = r.u32();
        if ((state >> ds.node_count) != 0 || (mask >> ds.node_count) != 0)
            throw Error(ErrorKind::io, source + ": label bits beyond the node count in sample " + std::to_string(k));
        s.state = LabelState(ds.node_count, state);
        s.observed = ObservedLabels::masked(s.state, mask);
        s.features = r.f64s(ds.feature_dim);
        ds.samples.push_back(std::move(s));
    }
    if (!r.at_end()) throw Error(ErrorKind::io, source + ": trailing bytes");
    return ds;
}

void save_dataset(const std::string& path, const Dataset& dataset) { write_file_atomic(path, encode_dataset(dataset)); }

Dataset load_dataset(const std::string& path) { return decode_dataset(read_file(path), path); }

std::string dataset_to_text(const Dataset& ds) {
    std::string out = "# seed " + std::to_string(ds.seed) + " graph_hash " + std::to_string(ds.graph_hash) + "\n";
    out += "identity\tmethod\tstate\tobserved";
    for (std::size_t c = 0; c < ds.feature_dim; ++c) out += "\tx" + std::to_string(c);
    out += '\n';
    char buf[64];
    for (const auto& s : ds.samples) {
        std::string observed(ds.node_count, '?');
        for (std::size_t i = 0; i < ds.node_count; ++i)
            if (s.observed.contains(i)) observed[i] = s.observed.value(i) ? '1' : '0';
        out += std::to_string(s.identity_id) + "\t" + std::to_string(s.method_id) + "\t" + s.state.to_string() + "\t" + observed;
        for (double x : s.features) {
            std::snprintf(buf, sizeof buf, "\t%.17g", x);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace hierlabel
