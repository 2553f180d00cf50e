// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/model.hpp"

#include <cmath>
#include <string>

#include "hierlabel/error.hpp"
#include "hierlabel/rng.hpp"

namespace hierlabel {

const char* to_string(Architecture arch) noexcept {
    switch (arch) {
        case Architecture::linear: return "linear";
        case Architecture::mlp1: return "mlp1";
    }
    return "?";
}

std::optional<Architecture> parse_architecture(std::string_view text) noexcept {
    if (text == "linear") return Architecture::linear;
    if (text == "mlp1") return Architecture::mlp1;
    return std::nullopt;
}

std::size_t ScorerParams::parameter_count(Architecture arch, std::size_t inputs, std::size_t hidden,
                                          std::size_t outputs) {
    if (arch == Architecture::linear) return outputs * inputs + outputs;
    return hidden * inputs + hidden + outputs * hidden + outputs;
}

ScorerParams ScorerParams::zeros(Architecture arch, std::size_t inputs, std::size_t hidden, std::size_t outputs) {
    if (inputs == 0 || outputs == 0) throw Error(ErrorKind::dimension, "scorer needs at least one input and output");
    if (arch == Architecture::linear && hidden != 0) throw Error(ErrorKind::dimension, "linear scorer has no hidden layer");
    if (arch == Architecture::mlp1 && hidden == 0) throw Error(ErrorKind::dimension, "mlp1 scorer needs a hidden width");
    ScorerParams p;
    p.arch_ = arch;
    p.inputs_ = inputs;
    p.hidden_ = hidden;
    p.outputs_ = outputs;
    p.values_.assign(parameter_count(arch, inputs, hidden, outputs), 0.0);
    return p;
}

ScorerParams ScorerParams::initialize(Architecture arch, std::size_t inputs, std::size_t hidden, std::size_t outputs,
                                      std::uint64_t seed) {
    ScorerParams p = zeros(arch, inputs, hidden, outputs);
    Rng rng(seed);
    auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t k = 0; k < count; ++k) p.values_[offset + k] = rng.uniform(-bound, bound);
    };
    if (arch == Architecture::linear) {
        fill(0, outputs * inputs, inputs);
    } else {
        fill(0, hidden * inputs, inputs);
        fill(hidden * inputs + hidden, outputs * hidden, hidden);
    }
    return p;
}

ScorerParams ScorerParams::from_values(Architecture arch, std::size_t inputs, std::size_t hidden, std::size_t outputs,
                                       std::vector<double> values) {
    ScorerParams p = zeros(arch, inputs, hidden, outputs);
    if (values.size() != p.values_.size())
        throw Error(ErrorKind::dimension, "expected " + std::to_string(p.values_.size()) + " parameters, got " +
                                              std::to_string(values.size()));
    p.values_ = std::move(values);
    return p;
}

namespace {

void check_input(const ScorerParams& params, std::span<const double> x) {
    if (x.size() != params.input_dim())
        throw Error(ErrorKind::dimension, "feature vector has " + std::to_string(x.size()) + " entries, scorer expects " +
                                              std::to_string(params.input_dim()));
}

// out[r] = bias[r] + Σ_c weight[r, c] * in[c]
void affine(const double* weight, const double* bias, std::span<const double> in, std::span<double> out) {
    const std::size_t cols = in.size();
    for (std::size_t r = 0; r < out.size(); ++r) {
        double acc = bias[r];
        const double* row = weight + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
        out[r] = acc;
    }
}

}  // namespace

ScoreVector forward(const ScorerParams& params, std::span<const double> x) {
    check_input(params, x);
    const std::size_t d = params.input_dim();
    const std::size_t h = params.hidden_dim();
    const std::size_t n = params.output_dim();
    const double* v = params.values().data();
    ScoreVector scores(n);
    if (params.architecture() == Architecture::linear) {
        affine(v, v + n * d, x, scores);
        return scores;
    }
    std::vector<double> hidden(h);
    affine(v, v + h * d, x, hidden);
    for (double& a : hidden) a = std::tanh(a);
    affine(v + h * d + h, v + h * d + h + n * h, hidden, scores);
    return scores;
}

void accumulate_backward(const ScorerParams& params, std::span<const double> x, std::span<const double> grad_scores,
                         std::span<double> grad_out) {
    check_input(params, x);
    const std::size_t d = params.input_dim();
    const std::size_t h = params.hidden_dim();
    const std::size_t n = params.output_dim();
    if (grad_scores.size() != n) throw Error(ErrorKind::dimension, "score gradient length mismatch");
    if (grad_out.size() != params.size()) throw Error(ErrorKind::dimension, "parameter gradient length mismatch");
    double* g = grad_out.data();
    if (params.architecture() == Architecture::linear) {
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < d; ++c) g[r * d + c] += grad_scores[r] * x[c];
            g[n * d + r] += grad_scores[r];
        }
        return;
    }
    const double* v = params.values().data();
    std::vector<double> hidden(h);
    affine(v, v + h * d, x, hidden);
    for (double& a : hidden) a = std::tanh(a);
    const double* w2 = v + h * d + h;
    double* g_w1 = g;
    double* g_b1 = g + h * d;
    double* g_w2 = g + h * d + h;
    double* g_b2 = g + h * d + h + n * h;
    std::vector<double> grad_hidden(h, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < h; ++c) {
            g_w2[r * h + c] += grad_scores[r] * hidden[c];
            grad_hidden[c] += grad_scores[r] * w2[r * h + c];
        }
        g_b2[r] += grad_scores[r];
    }
    for (std::size_t c = 0; c < h; ++c) {
        const double pre = grad_hidden[c] * (1.0 - hidden[c] * hidden[c]);
        for (std::size_t k = 0; k < d; ++k) g_w1[c * d + k] += pre * x[k];
        g_b1[c] += pre;
    }
}

std::vector<double> backward(const ScorerParams& params, std::span<const double> x, std::span<const double> grad_scores) {
    std::vector<double> out(params.size(), 0.0);
    accumulate_backward(params, x, grad_scores, out);
    return out;
}

void sgd_step(ScorerParams& params, std::span<const double> grads, double lr, double momentum, SgdState& state) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorKind::input, "learning rate must be finite and > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorKind::input, "momentum must lie in [0, 1)");
    if (grads.size() != params.size()) throw Error(ErrorKind::dimension, "gradient length mismatch");
    for (std::size_t k = 0; k < grads.size(); ++k)
        if (!std::isfinite(grads[k]))
            throw Error(ErrorKind::numeric, "non-finite gradient at parameter " + std::to_string(k) + "; update refused");
    if (state.velocity.size() != params.size()) state.velocity.assign(params.size(), 0.0);
    auto values = params.values();
    for (std::size_t k = 0; k < grads.size(); ++k) {
        state.velocity[k] = momentum * state.velocity[k] + grads[k];
        values[k] -= lr * state.velocity[k];
    }
}

}  // namespace hierlabel
