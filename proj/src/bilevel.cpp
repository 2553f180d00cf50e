// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>

#include "hierlabel/rng.hpp"

namespace hierlabel {

// ---------------------------------------------------------------------------
// Objectives through the scorer

namespace {

template <typename F>
void parallel_for(std::size_t count, F&& body) {
    std::vector<std::exception_ptr> failures(count);
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
        try {
            body(static_cast<std::size_t>(k));
        } catch (...) {
            failures[static_cast<std::size_t>(k)] = std::current_exception();
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
}

std::vector<double> reduce_backward(const ScorerParams& params, std::span<const Example> examples,
                                    const std::vector<std::vector<double>>& grad_scores) {
    std::vector<std::vector<double>> per_sample(examples.size());
    parallel_for(examples.size(), [&](std::size_t k) {
        per_sample[k] = backward(params, examples[k].features, grad_scores[k]);
    });
    std::vector<double> grad(params.size(), 0.0);
    for (const auto& g : per_sample)
        for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += g[p];
    return grad;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Restrict each example's evidence to the root label.
std::vector<ScoredExample> root_only(std::vector<ScoredExample> scored) {
    for (auto& ex : scored) {
        ObservedLabels root;
        if (ex.observed.contains(0)) root.set(0, ex.observed.value(0));
        ex.observed = root;
    }
    return scored;
}

}  // namespace

std::vector<ScoredExample> score_examples(const ScorerParams& params, std::span<const Example> examples) {
    std::vector<ScoredExample> out(examples.size());
    parallel_for(examples.size(), [&](std::size_t k) {
        out[k].scores = forward(params, examples[k].features);
        out[k].observed = examples[k].observed;
    });
    return out;
}

ObjectiveResult objective(LossKind kind, const StateSpace& space, const ScorerParams& params,
                          std::span<const Example> examples, const TaskWeights& weights) {
    const auto scored = score_examples(params, examples);
    const BatchLoss loss = batch_loss(kind, space, scored, weights);
    return {loss.value, reduce_backward(params, examples, loss.grad_scores)};
}

ObjectiveResult primary_objective(LossKind kind, const StateSpace& space, const ScorerParams& params,
                                  std::span<const Example> examples) {
    const auto scored = root_only(score_examples(params, examples));
    const LossKind head = kind == LossKind::independent ? LossKind::independent : LossKind::marginal;
    const BatchLoss loss = batch_loss(head, space, scored, TaskWeights::uniform(space.node_count(), 1.0));
    return {loss.value, reduce_backward(params, examples, loss.grad_scores)};
}

std::vector<double> task_losses(LossKind kind, const StateSpace& space, const ScorerParams& params,
                                std::span<const Example> examples) {
    return batch_task_losses(kind, space, score_examples(params, examples));
}

// ---------------------------------------------------------------------------
// Configuration and trace

void BilevelConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(lr_theta)) throw Error(ErrorKind::config, "lr_theta must be > 0");
    if (!(std::isfinite(lr_lambda) && lr_lambda >= 0.0)) throw Error(ErrorKind::config, "lr_lambda must be >= 0");
    if (!positive(lambda_init)) throw Error(ErrorKind::config, "lambda_init must be > 0");
    if (!positive(epsilon_scale)) throw Error(ErrorKind::config, "epsilon_scale must be > 0");
    if (!positive(lambda_floor)) throw Error(ErrorKind::config, "lambda_floor must be > 0");
    if (!(lambda_floor < lambda_init)) throw Error(ErrorKind::config, "lambda_floor must be below lambda_init");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorKind::config, "momentum must lie in [0, 1)");
    if (!positive(dwa_temperature)) throw Error(ErrorKind::config, "dwa_temperature must be > 0");
    if (batch_size == 0) throw Error(ErrorKind::config, "batch_size must be >= 1");
}

std::string format_trace(const TrainTrace& trace, std::size_t node_count) {
    std::string out = "step\ttrain_loss\tval_primary_loss";
    for (std::size_t i = 0; i < node_count; ++i) out += "\tlambda_" + std::to_string(i);
    out += '\n';
    char buf[64];
    for (const auto& r : trace.records) {
        out += std::to_string(r.step);
        for (double v : {r.train_loss, r.val_primary_loss}) {
            std::snprintf(buf, sizeof buf, "\t%.17g", v);
            out += buf;
        }
        for (double v : r.lambda) {
            std::snprintf(buf, sizeof buf, "\t%.17g", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hypergradient

std::vector<double> hypergradient(const StateSpace& space, const ScorerParams& params, const TaskWeights& weights,
                                  std::span<const Example> train_batch, std::span<const Example> val_batch,
                                  double lr_theta, double epsilon_scale) {
    if (train_batch.empty() || val_batch.empty()) throw Error(ErrorKind::input, "hypergradient needs nonempty batches");
    if (!(lr_theta > 0.0) || !(epsilon_scale > 0.0))
        throw Error(ErrorKind::input, "lr_theta and epsilon_scale must be > 0");
    const std::size_t n = space.node_count();

    const ObjectiveResult lower = objective(LossKind::marginal, space, params, train_batch, weights);
    if (!all_finite(lower.grad)) throw Error(ErrorKind::numeric, "non-finite training gradient in hypergradient");
    ScorerParams lookahead = params;
    auto theta = lookahead.values();
    for (std::size_t p = 0; p < theta.size(); ++p) theta[p] -= lr_theta * lower.grad[p];

    const ObjectiveResult upper = primary_objective(LossKind::marginal, space, lookahead, val_batch);
    if (!all_finite(upper.grad)) throw Error(ErrorKind::numeric, "non-finite validation gradient in hypergradient");
    const double h_norm = norm(upper.grad);
    if (h_norm == 0.0) return std::vector<double>(n, 0.0);

    const double radius = epsilon_scale / h_norm;
    ScorerParams plus = params;
    ScorerParams minus = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        plus.values()[p] += radius * upper.grad[p];
        minus.values()[p] -= radius * upper.grad[p];
    }
    const auto loss_plus = task_losses(LossKind::marginal, space, plus, train_batch);
    const auto loss_minus = task_losses(LossKind::marginal, space, minus, train_batch);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = -lr_theta * (loss_plus[i] - loss_minus[i]) / (2.0 * radius);
    if (!all_finite(out)) throw Error(ErrorKind::numeric, "non-finite hypergradient");
    return out;
}

// ---------------------------------------------------------------------------
// Training loops

const char* to_string(Strategy strategy) noexcept {
    switch (strategy) {
        case Strategy::so: return "so";
        case Strategy::joint_likelihood: return "joint";
        case Strategy::fixed_equal: return "fixed_equal";
        case Strategy::fixed_given: return "fixed_given";
        case Strategy::dwa: return "dwa";
        case Strategy::independent: return "independent";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) noexcept {
    if (text == "so") return Strategy::so;
    if (text == "joint" || text == "joint_likelihood") return Strategy::joint_likelihood;
    if (text == "fixed_equal") return Strategy::fixed_equal;
    if (text == "fixed_given") return Strategy::fixed_given;
    if (text == "dwa") return Strategy::dwa;
    if (text == "independent") return Strategy::independent;
    return std::nullopt;
}

LossKind loss_kind(Strategy strategy) noexcept {
    switch (strategy) {
        case Strategy::joint_likelihood: return LossKind::joint;
        case Strategy::independent: return LossKind::independent;
        default: return LossKind::marginal;
    }
}

namespace {

// Disjoint (train, validation) index windows over one epoch permutation.
struct BatchPlan {
    std::size_t batch = 0;
    std::size_t steps = 0;
};

BatchPlan plan_batches(std::size_t samples, std::size_t batch_size) {
    if (samples < 2) throw Error(ErrorKind::input, "training needs at least two samples");
    BatchPlan plan{batch_size, samples / (2 * batch_size)};
    if (plan.steps == 0) plan = {samples / 2, 1};
    return plan;
}

std::vector<Example> gather(std::span<const Example> data, std::span<const std::size_t> idx) {
    std::vector<Example> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(data[i]);
    return out;
}

void check_dimensions(const StateSpace& space, std::span<const Example> data, const ScorerParams& initial) {
    if (initial.output_dim() != space.node_count())
        throw Error(ErrorKind::dimension, "scorer outputs do not match the graph's node count");
    for (const auto& ex : data) {
        if (ex.features.size() != initial.input_dim())
            throw Error(ErrorKind::dimension, "example feature length does not match the scorer input");
        check_observed(space, ex.observed);
    }
}

std::vector<double> dwa_weights(const std::vector<double>& previous, const std::vector<double>& before,
                                double temperature) {
    const std::size_t n = previous.size();
    std::vector<double> ratio(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        if (before[i] > 0.0) ratio[i] = previous[i] / before[i];
    const double peak = *std::max_element(ratio.begin(), ratio.end()) / temperature;
    std::vector<double> out(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(ratio[i] / temperature - peak);
        total += out[i];
    }
    for (double& w : out) w = std::max(static_cast<double>(n) * w / total, std::numeric_limits<double>::min());
    return out;
}

TrainResult run(Strategy strategy, const StateSpace& space, std::span<const Example> data, const BilevelConfig& config,
                const ScorerParams& initial, TaskWeights weights) {
    config.validate();
    TrainResult result{initial, std::move(weights), {}, {}};
    if (config.epochs == 0) return result;
    check_dimensions(space, data, initial);

    const LossKind kind = loss_kind(strategy);
    const std::size_t n = space.node_count();
    const BatchPlan plan = plan_batches(data.size(), config.batch_size);
    const std::uint64_t batch_seed = derive_seed(config.seed, "batches");
    std::vector<std::size_t> order(data.size());

    std::vector<std::vector<double>> epoch_task_loss;  // DWA history
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(batch_seed, epoch));
        rng.shuffle(std::span<std::size_t>(order));

        if (strategy == Strategy::dwa && epoch_task_loss.size() >= 2) {
            const auto& prev = epoch_task_loss[epoch_task_loss.size() - 1];
            const auto& before = epoch_task_loss[epoch_task_loss.size() - 2];
            result.weights = TaskWeights(dwa_weights(prev, before, config.dwa_temperature));
        }
        std::vector<double> task_sum(n, 0.0);

        for (std::size_t s = 0; s < plan.steps; ++s, ++step) {
            const std::span<const std::size_t> window(order.data() + 2 * s * plan.batch, 2 * plan.batch);
            const auto train_batch = gather(data, window.first(plan.batch));
            const auto val_batch = gather(data, window.subspan(plan.batch));

            if (strategy == Strategy::so && config.lr_lambda > 0.0) {
                const auto hyper = hypergradient(space, result.params, result.weights, train_batch, val_batch,
                                                 config.lr_theta, config.epsilon_scale);
                std::vector<double> lambda(result.weights.values().begin(), result.weights.values().end());
                for (std::size_t i = 0; i < n; ++i)
                    lambda[i] = std::max(lambda[i] - config.lr_lambda * hyper[i], config.lambda_floor);
                result.weights = TaskWeights(std::move(lambda));
            }

            const double val_primary = primary_objective(kind, space, result.params, val_batch).value;
            const ObjectiveResult lower = objective(kind, space, result.params, train_batch, result.weights);

            TraceRecord record{step, lower.value, val_primary,
                               {result.weights.values().begin(), result.weights.values().end()}};
            result.trace.records.push_back(std::move(record));
            if (!std::isfinite(lower.value) || !std::isfinite(val_primary) || !all_finite(lower.grad))
                throw TrainingDiverged("loss became non-finite at step " + std::to_string(step), result.trace);

            if (strategy == Strategy::dwa) {
                const auto tl = task_losses(kind, space, result.params, train_batch);
                for (std::size_t i = 0; i < n; ++i) task_sum[i] += tl[i];
            }
            sgd_step(result.params, lower.grad, config.lr_theta, config.momentum, result.optimizer);
            if (!all_finite(result.params.values()))
                throw TrainingDiverged("parameters became non-finite at step " + std::to_string(step), result.trace);
        }
        if (strategy == Strategy::dwa) {
            for (double& v : task_sum) v /= static_cast<double>(plan.steps);
            epoch_task_loss.push_back(std::move(task_sum));
        }
    }
    return result;
}

}  // namespace

TrainResult train(const StateSpace& space, std::span<const Example> data, const BilevelConfig& config,
                  const ScorerParams& initial) {
    config.validate();
    return run(Strategy::so, space, data, config, initial, TaskWeights::uniform(space.node_count(), config.lambda_init));
}

TrainResult train_baseline(Strategy strategy, const StateSpace& space, std::span<const Example> data,
                           const BilevelConfig& config, const ScorerParams& initial,
                           const std::optional<TaskWeights>& given) {
    const std::size_t n = space.node_count();
    switch (strategy) {
        case Strategy::so: return train(space, data, config, initial);
        case Strategy::fixed_given:
            if (!given) throw Error(ErrorKind::config, "fixed_given needs a weight vector");
            if (given->size() != n) throw Error(ErrorKind::dimension, "given weights do not match the node count");
            return run(strategy, space, data, config, initial, *given);
        default: return run(strategy, space, data, config, initial, TaskWeights::uniform(n, 1.0));
    }
}

}  // namespace hierlabel
