// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hierlabel/binary_io.hpp"
#include "hierlabel/checkpoint.hpp"
#include "hierlabel/error.hpp"
#include "hierlabel/eval.hpp"
#include "hierlabel/hierarchy.hpp"
#include "hierlabel/inference.hpp"
#include "hierlabel/psychometrics.hpp"
#include "hierlabel/rng.hpp"

namespace hierlabel {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Experiment config

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
    if (path.empty() || path == "default" || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, std::string("experiment config: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        cfg.graph = resolve(doc.value("graph", cfg.graph), base_dir);
        cfg.dataset = resolve(doc.value("dataset", cfg.dataset), base_dir);
        cfg.scenario = resolve(doc.value("scenario", cfg.scenario), base_dir);
        cfg.n_real = doc.value("n_real", cfg.n_real);
        cfg.n_fake_per_method = doc.value("n_fake_per_method", cfg.n_fake_per_method);
        if (doc.contains("architecture")) {
            const auto arch = parse_architecture(doc.at("architecture").get<std::string>());
            if (!arch) throw Error(ErrorKind::config, "experiment config: unknown architecture");
            cfg.architecture = *arch;
        }
        cfg.hidden = doc.value("hidden", cfg.architecture == Architecture::mlp1 ? std::size_t{16} : std::size_t{0});
        if (doc.contains("strategy")) {
            const auto s = parse_strategy(doc.at("strategy").get<std::string>());
            if (!s) throw Error(ErrorKind::config, "experiment config: unknown strategy '" + doc.at("strategy").get<std::string>() + "'");
            cfg.strategy = *s;
        }
        if (doc.contains("given_weights")) cfg.given_weights = doc.at("given_weights").get<std::vector<double>>();
        if (doc.contains("protocol")) {
            const auto p = parse_protocol(doc.at("protocol").get<std::string>());
            if (!p) throw Error(ErrorKind::config, "experiment config: unknown protocol");
            cfg.protocol = *p;
        }
        cfg.held_out = doc.value("held_out", cfg.held_out);
        if (doc.contains("split_ratios")) {
            const auto r = doc.at("split_ratios").get<std::vector<double>>();
            if (r.size() != 3) throw Error(ErrorKind::config, "experiment config: split_ratios needs 3 entries");
            cfg.split_ratios = {r[0], r[1], r[2]};
        }
        auto& t = cfg.trainer;
        t.lr_theta = doc.value("lr_theta", t.lr_theta);
        t.momentum = doc.value("momentum", t.momentum);
        t.lr_lambda = doc.value("lr_lambda", t.lr_lambda);
        t.lambda_init = doc.value("lambda_init", t.lambda_init);
        t.epsilon_scale = doc.value("epsilon_scale", t.epsilon_scale);
        t.epochs = doc.value("epochs", t.epochs);
        t.batch_size = doc.value("batch_size", t.batch_size);
        t.lambda_floor = doc.value("lambda_floor", t.lambda_floor);
        t.dwa_temperature = doc.value("dwa_temperature", t.dwa_temperature);
        cfg.out = resolve(doc.value("out", cfg.out), base_dir);
        cfg.seed = doc.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("experiment config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    const std::string text = read_file(path);
    return parse_experiment_config(text, fs::path(path).parent_path().string());
}

SplitRequest split_request(const ExperimentConfig& cfg, const LabelGraph& graph) {
    SplitRequest req;
    req.protocol = cfg.protocol;
    req.ratios = cfg.split_ratios;
    req.seed = cfg.seed;
    if (cfg.protocol == Protocol::p2) {
        const auto id = graph.find(cfg.held_out);
        if (!id || graph.node(*id).tier != Tier::attribute)
            throw Error(ErrorKind::config, "held-out '" + cfg.held_out + "' is not an attribute of the graph");
        req.held_out_attribute = *id;
    } else if (cfg.protocol == Protocol::p1) {
        std::stringstream ss(cfg.held_out);
        for (std::string tok; std::getline(ss, tok, ',');) {
            try {
                req.held_out_methods.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
            } catch (const std::exception&) {
                throw Error(ErrorKind::config, "held-out method id '" + tok + "' is not an integer");
            }
        }
    }
    return req;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::string provenance(std::uint64_t seed, std::uint64_t graph_hash) {
    return "# hierlabel format " + std::to_string(kFormatVersion) + " seed " + std::to_string(seed) + " graph_hash " +
           std::to_string(graph_hash) + "\n";
}

std::string default_out(const std::string& explicit_out, const std::string& leaf) {
    if (!explicit_out.empty()) return explicit_out;
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0')
        return (fs::path(env) / leaf).string();
    return leaf;
}

LabelGraph graph_from(const std::string& path) { return path.empty() || path == "default" ? default_graph() : load_graph(path); }

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

int cmd_validate(const std::string& path, std::ostream& out) {
    const LabelGraph graph = graph_from(path);
    const StateSpace space(graph);
    out << "N=" << graph.size() << ", legal states=" << space.state_count() << "\n";
    out << "tiers: root=" << graph.count(Tier::root) << " attribute=" << graph.count(Tier::attribute)
        << " region=" << graph.count(Tier::region) << "\n";
    out << "edges=" << graph.edges().size() << " graph_hash=" << graph.hash() << "\n";
    return exit_code::ok;
}

int cmd_enumerate(const std::string& path, const std::string& out_path, std::ostream& out) {
    const LabelGraph graph = graph_from(path);
    const auto states = enumerate_legal(graph);
    std::string text = provenance(0, graph.hash());
    text += "# node order:";
    for (const auto& n : graph.nodes()) text += " " + n.name;
    text += "\n";
    for (const auto& s : states) text += s.to_string() + "\n";
    if (out_path.empty())
        out << text;
    else
        write_file_atomic(out_path, text);
    out << "legal states=" << states.size() << "\n";
    return exit_code::ok;
}

Scenario scenario_from(const std::string& path) {
    return path.empty() || path == "default" ? default_ffsc_scenario() : parse_scenario(read_file(path));
}

int cmd_synth(const std::string& scenario_path, std::size_t n_real, std::size_t n_fake, std::uint64_t seed,
              const std::string& out_path, const std::string& text_path, std::ostream& out) {
    const Scenario sc = scenario_from(scenario_path);
    Dataset ds;
    ds.node_count = sc.graph.size();
    ds.feature_dim = sc.feature_dim;
    ds.graph_hash = sc.graph.hash();
    ds.seed = seed;
    ds.samples = generate(sc, n_real, n_fake, seed);
    save_dataset(out_path, ds);
    if (!text_path.empty()) write_file_atomic(text_path, dataset_to_text(ds));
    out << "samples=" << ds.samples.size() << " real=" << n_real << " fake=" << ds.samples.size() - n_real
        << " methods=" << sc.methods.size() << " graph_hash=" << ds.graph_hash << " -> " << out_path << "\n";
    return exit_code::ok;
}

struct LoadedData {
    LabelGraph graph;
    std::vector<SyntheticSample> samples;
    std::size_t feature_dim = 0;
};

LoadedData data_for(const ExperimentConfig& cfg) {
    if (!cfg.dataset.empty()) {
        Dataset ds = load_dataset(cfg.dataset);
        LabelGraph graph = graph_from(cfg.graph);
        if (graph.hash() != ds.graph_hash)
            throw Error(ErrorKind::hash_mismatch, "dataset '" + cfg.dataset + "' was generated for graph hash " +
                                                      std::to_string(ds.graph_hash) + ", config graph has " +
                                                      std::to_string(graph.hash()));
        return {std::move(graph), std::move(ds.samples), ds.feature_dim};
    }
    const Scenario sc = scenario_from(cfg.scenario);
    return {sc.graph, generate(sc, cfg.n_real, cfg.n_fake_per_method, derive_seed(cfg.seed, "dataset")), sc.feature_dim};
}

std::string weights_text(const LabelGraph& graph, const TaskWeights& w, std::uint64_t seed) {
    std::string text = provenance(seed, graph.hash()) + "node\tname\tlambda\n";
    char buf[64];
    for (const auto& n : graph.nodes()) {
        std::snprintf(buf, sizeof buf, "%.17g", w[n.id]);
        text += std::to_string(n.id) + "\t" + n.name + "\t" + buf + "\n";
    }
    return text;
}

int cmd_train(ExperimentConfig cfg, std::ostream& out) {
    const LoadedData data = data_for(cfg);
    const StateSpace space(data.graph);
    const SplitPlan plan = make_split(data.samples, split_request(cfg, data.graph));
    const auto train_examples = to_examples(data.samples, plan.train);
    const auto val_examples = to_examples(data.samples, plan.val);
    const ScorerParams initial = ScorerParams::initialize(cfg.architecture, data.feature_dim, cfg.hidden,
                                                          data.graph.size(), derive_seed(cfg.seed, "init"));
    cfg.trainer.seed = cfg.seed;
    std::optional<TaskWeights> given;
    if (cfg.given_weights) given = TaskWeights(*cfg.given_weights);
    const TrainResult result = train_baseline(cfg.strategy, space, train_examples, cfg.trainer, initial, given);

    const std::string dir = default_out(cfg.out, "run");
    Checkpoint ck{result.params, result.weights, result.optimizer, data.graph.hash(), cfg.seed,
                  data.graph.canonical_text()};
    save_checkpoint((fs::path(dir) / "checkpoint.bin").string(), ck);
    write_file_atomic((fs::path(dir) / "trace.tsv").string(),
                      provenance(cfg.seed, data.graph.hash()) + format_trace(result.trace, data.graph.size()));
    write_file_atomic((fs::path(dir) / "weights.tsv").string(), weights_text(data.graph, result.weights, cfg.seed));

    out << "strategy=" << to_string(cfg.strategy) << " protocol=" << to_string(cfg.protocol) << " train=" << plan.train.size()
        << " val=" << plan.val.size() << " test=" << plan.test.size() << " steps=" << result.trace.records.size() << "\n";
    if (!result.trace.records.empty()) {
        const auto& last = result.trace.records.back();
        out << "final train_loss=" << fmt(last.train_loss) << " batch val_primary_loss=" << fmt(last.val_primary_loss) << "\n";
    }
    if (!val_examples.empty())
        out << "validation split primary_loss="
            << fmt(primary_objective(loss_kind(cfg.strategy), space, result.params, val_examples).value) << "\n";
    out << "wrote " << dir << "/{checkpoint.bin,trace.tsv,weights.tsv}\n";
    return exit_code::ok;
}

int cmd_eval(const Checkpoint& ck, const Dataset& ds, const ExperimentConfig& cfg, const std::string& out_dir,
             std::ostream& out) {
    if (ck.graph_hash != ds.graph_hash)
        throw Error(ErrorKind::hash_mismatch, "checkpoint graph hash " + std::to_string(ck.graph_hash) +
                                                  " differs from dataset graph hash " + std::to_string(ds.graph_hash));
    const LabelGraph graph = parse_graph(ck.graph_config);
    if (graph.hash() != ck.graph_hash) throw Error(ErrorKind::io, "checkpoint graph text does not match its hash");
    if (ck.params.input_dim() != ds.feature_dim)
        throw Error(ErrorKind::dimension, "checkpoint expects " + std::to_string(ck.params.input_dim()) +
                                              " features, dataset has " + std::to_string(ds.feature_dim));
    const StateSpace space(graph);
    const SplitPlan plan = make_split(ds.samples, split_request(cfg, graph));
    const auto cells = default_cells(graph, ds.samples, plan);
    const PredictionHead head =
        cfg.strategy == Strategy::independent ? PredictionHead::independent : PredictionHead::hierarchical;
    const EvalReport report = evaluate(space, ck.params, head, ds.samples, cells, to_string(cfg.protocol));
    const std::string table = render_table(report);
    const std::string header = provenance(cfg.seed, graph.hash());
    write_file_atomic((fs::path(out_dir) / "report.txt").string(), header + table);
    write_file_atomic((fs::path(out_dir) / "report.tsv").string(), header + render_tsv(report));
    out << table;
    return exit_code::ok;
}

std::vector<std::vector<double>> parse_features(std::string_view text, std::size_t dim) {
    std::vector<std::vector<double>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        for (char& c : line)
            if (c == ',' || c == '\t') c = ' ';
        std::istringstream fields(line);
        std::vector<double> row;
        for (std::string tok; fields >> tok;) {
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument("bad");
                row.push_back(v);
            } catch (const std::exception&) {
                throw Error(ErrorKind::input, "features line " + std::to_string(line_no) + ": malformed value '" + tok + "'");
            }
        }
        if (row.empty()) continue;
        if (row.size() != dim)
            throw Error(ErrorKind::dimension, "features line " + std::to_string(line_no) + ": expected " +
                                                  std::to_string(dim) + " values, found " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_infer(const Checkpoint& ck, const std::string& features_path, const std::string& out_path, std::ostream& out) {
    const LabelGraph graph = parse_graph(ck.graph_config);
    if (graph.hash() != ck.graph_hash) throw Error(ErrorKind::io, "checkpoint graph text does not match its hash");
    const StateSpace space(graph);
    const auto rows = parse_features(read_file(features_path), ck.params.input_dim());
    std::string text = provenance(ck.seed, graph.hash()) + "sample";
    for (const auto& n : graph.nodes()) text += "\t" + n.name;
    text += "\tverdict\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto marg = predict(space, forward(ck.params, rows[k]));
        text += std::to_string(k);
        for (double m : marg) text += "\t" + fmt(m);
        text += marg[0] >= 0.5 ? "\tfake\n" : "\treal\n";
    }
    if (out_path.empty())
        out << text;
    else
        write_file_atomic(out_path, text);
    return exit_code::ok;
}

int cmd_threshold_fit(const std::string& trials_path, double ridge, const std::string& out_path, std::ostream& out) {
    const auto trials = parse_trials(read_file(trials_path));
    FitOptions options;
    options.ridge = ridge;
    const PsychometricFit fit = fit_psychometric(trials, options);
    const std::string text = format_fit(fit);
    if (!out_path.empty()) write_file_atomic(out_path, text);
    out << text;
    return exit_code::ok;
}

void apply_overrides(ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed, const std::string& out,
                     const std::string& strategy, const std::string& protocol, const std::string& held_out) {
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    if (!strategy.empty()) {
        const auto s = parse_strategy(strategy);
        if (!s) throw Error(ErrorKind::config, "unknown strategy '" + strategy + "'");
        cfg.strategy = *s;
    }
    if (!protocol.empty()) {
        const auto p = parse_protocol(protocol);
        if (!p) throw Error(ErrorKind::config, "unknown protocol '" + protocol + "'");
        cfg.protocol = *p;
    }
    if (!held_out.empty()) cfg.held_out = held_out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchical label inference, training and evaluation", "hierlabel"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

    std::string config;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::string strategy;
    std::string protocol;
    std::string held_out;

    auto* validate = app.add_subcommand("validate", "Parse a hierarchy config and count its legal states");
    std::string graph_arg;
    validate->add_option("graph", graph_arg, "Hierarchy config ('default' for the shipped graph)");
    validate->add_option("--config", config, "Hierarchy config");

    auto* enumerate = app.add_subcommand("enumerate", "List the legal states of a hierarchy");
    enumerate->add_option("graph", graph_arg, "Hierarchy config");
    enumerate->add_option("--config", config, "Hierarchy config");
    enumerate->add_option("--out", out_path, "Output file (stdout when omitted)");

    auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic dataset");
    std::string scenario = "default";
    std::size_t n_real = 1000;
    std::size_t n_fake = 80;
    std::string text_out;
    synth->add_option("--scenario,--config", scenario, "Scenario JSON ('default' for the shipped scenario)");
    synth->add_option("--n-real", n_real, "Real samples (one per identity)");
    synth->add_option("--n-fake-per-method", n_fake, "Fake samples per method");
    synth->add_option("--seed", seed, "Generation seed");
    synth->add_option("--out", out_path, "Dataset file");
    synth->add_option("--text", text_out, "Also write a tab-separated export");

    auto* train_cmd = app.add_subcommand("train", "Train a scorer from an experiment config");
    train_cmd->add_option("--config", config, "Experiment config JSON")->required();
    train_cmd->add_option("--seed", seed, "Override the experiment seed");
    train_cmd->add_option("--out", out_path, "Output directory");
    train_cmd->add_option("--strategy", strategy, "so|joint|fixed_equal|fixed_given|dwa|independent");
    train_cmd->add_option("--protocol", protocol, "intra|p1|p2");
    train_cmd->add_option("--held-out", held_out, "p2: attribute name; p1: comma-separated method ids");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    std::string checkpoint;
    std::string dataset;
    eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--dataset", dataset, "Dataset file")->required();
    eval_cmd->add_option("--config", config, "Experiment config JSON (protocol, hold-out, ratios, strategy)");
    eval_cmd->add_option("--seed", seed, "Split seed (defaults to the checkpoint's seed)");
    eval_cmd->add_option("--out", out_path, "Output directory");
    eval_cmd->add_option("--strategy", strategy, "Selects the prediction head (independent or hierarchical)");
    eval_cmd->add_option("--protocol", protocol, "intra|p1|p2");
    eval_cmd->add_option("--held-out", held_out, "p2: attribute name; p1: comma-separated method ids");

    auto* infer = app.add_subcommand("infer", "Per-sample marginals of every label");
    std::string features;
    infer->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    infer->add_option("features,--features", features, "Feature rows (whitespace, comma or tab separated)")->required();
    infer->add_option("--out", out_path, "Output file (stdout when omitted)");

    auto* fit = app.add_subcommand("threshold-fit", "Fit a Gaussian-CDF psychometric function");
    std::string trials;
    double ridge = 0.0;
    fit->add_option("trials,--config", trials, "Trials file: 'degree response' per line")->required();
    fit->add_option("--ridge", ridge, "Penalty on log sigma for near-separable data")->check(CLI::NonNegativeNumber);
    fit->add_option("--out", out_path, "Fit output file");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::ok : exit_code::usage;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        if (*validate) return cmd_validate(config.empty() ? graph_arg : config, out);
        if (*enumerate) return cmd_enumerate(config.empty() ? graph_arg : config, out_path, out);
        if (*synth)
            return cmd_synth(scenario, n_real, n_fake, seed.value_or(0), default_out(out_path, "dataset.hlds"), text_out, out);
        if (*train_cmd) {
            ExperimentConfig cfg = load_experiment_config(config);
            apply_overrides(cfg, seed, out_path, strategy, protocol, held_out);
            return cmd_train(std::move(cfg), out);
        }
        if (*eval_cmd) {
            const Checkpoint ck = load_checkpoint(checkpoint);
            const Dataset ds = load_dataset(dataset);
            ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_experiment_config(config);
            if (config.empty() || !seed) cfg.seed = seed.value_or(config.empty() ? ck.seed : cfg.seed);
            apply_overrides(cfg, std::nullopt, "", strategy, protocol, held_out);
            return cmd_eval(ck, ds, cfg, default_out(out_path, "eval"), out);
        }
        if (*infer) return cmd_infer(load_checkpoint(checkpoint), features, out_path, out);
        if (*fit) return cmd_threshold_fit(trials, ridge, out_path, out);
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    }
    return exit_code::usage;
}

}  // namespace hierlabel
