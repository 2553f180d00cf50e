// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hierlabel/error.hpp"

namespace hierlabel {

namespace {

void check_pair(std::span<const double> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size())
        throw Error(ErrorKind::dimension, "predictions and labels differ in length");
    if (predictions.empty()) throw Error(ErrorKind::input, "no predictions");
    for (int y : labels)
        if (y != 0 && y != 1) throw Error(ErrorKind::input, "labels must be 0 or 1");
}

}  // namespace

double accuracy(std::span<const double> predictions, std::span<const int> labels, double threshold) {
    check_pair(predictions, labels);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < predictions.size(); ++k)
        if ((predictions[k] >= threshold ? 1 : 0) == labels[k]) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double auc(std::span<const double> predictions, std::span<const int> labels) {
    check_pair(predictions, labels);
    const std::size_t n = predictions.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });
    // Twice the average rank keeps tied ranks integral: ranks lo+1..hi average to (lo+hi+1)/2.
    double rank_sum_x2 = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo + 1;
        while (hi < n && predictions[order[hi]] == predictions[order[lo]]) ++hi;
        std::size_t pos_in_run = 0;
        for (std::size_t k = lo; k < hi; ++k) pos_in_run += static_cast<std::size_t>(labels[order[k]]);
        rank_sum_x2 += static_cast<double>(pos_in_run) * static_cast<double>(lo + hi + 1);
        n_pos += pos_in_run;
        lo = hi;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::input, "AUC is undefined with a single class");
    const double p = static_cast<double>(n_pos);
    const double u_x2 = rank_sum_x2 - p * (p + 1.0);
    return 100.0 * u_x2 / (2.0 * p * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_points(std::span<const double> predictions, std::span<const int> labels) {
    check_pair(predictions, labels);
    const std::size_t n = predictions.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return predictions[a] > predictions[b]; });
    const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double n_neg = static_cast<double>(n) - n_pos;
    std::vector<RocPoint> out;
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi < n && predictions[order[hi]] == predictions[order[lo]]) {
            (labels[order[hi]] == 1 ? tp : fp) += 1.0;
            ++hi;
        }
        out.push_back({predictions[order[lo]], n_pos > 0 ? tp / n_pos : 0.0, n_neg > 0 ? fp / n_neg : 0.0});
        lo = hi;
    }
    return out;
}

std::vector<double> primary_predictions(const StateSpace& space, const ScorerParams& params, PredictionHead head,
                                        std::span<const SyntheticSample> samples, std::span<const std::size_t> indices) {
    std::vector<double> out(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const ScoreVector scores = forward(params, samples[indices[k]].features);
        if (head == PredictionHead::independent) {
            out[k] = 1.0 / (1.0 + std::exp(-scores[0]));
        } else {
            out[k] = marginal(joint(space, scores), 0);
        }
    }
    return out;
}

std::vector<CellSpec> default_cells(const LabelGraph& graph, std::span<const SyntheticSample> samples,
                                    const SplitPlan& plan) {
    std::vector<CellSpec> cells;
    cells.push_back({"overall", plan.test});
    if (plan.protocol == Protocol::p1) {
        for (std::uint32_t m : plan.held_out_methods) {
            CellSpec cell{"method_" + std::to_string(m), {}};
            for (std::size_t i : plan.test)
                if (samples[i].method_id == 0 || samples[i].method_id == m) cell.indices.push_back(i);
            cells.push_back(std::move(cell));
        }
    }
    for (std::size_t a : graph.ids_of(Tier::attribute)) {
        CellSpec cell{graph.node(a).name, {}};
        for (std::size_t i : plan.test)
            if (samples[i].method_id == 0 || samples[i].state[a]) cell.indices.push_back(i);
        cells.push_back(std::move(cell));
    }
    return cells;
}

EvalReport evaluate(const StateSpace& space, const ScorerParams& params, PredictionHead head,
                    std::span<const SyntheticSample> samples, std::span<const CellSpec> cells,
                    const std::string& protocol) {
    EvalReport report;
    for (const auto& spec : cells) {
        EvalCell cell{protocol, spec.name, std::nullopt, std::nullopt, 0, 0};
        std::vector<int> labels;
        for (std::size_t i : spec.indices) labels.push_back(samples[i].state[0] ? 1 : 0);
        cell.n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
        cell.n_neg = labels.size() - cell.n_pos;
        if (!labels.empty()) {
            const auto preds = primary_predictions(space, params, head, samples, spec.indices);
            cell.acc = accuracy(preds, labels);
            if (cell.n_pos > 0 && cell.n_neg > 0) cell.auc = auc(preds, labels);
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

namespace {

std::string metric(const std::optional<double>& v, const char* missing) {
    if (!v) return missing;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

}  // namespace

std::string render_table(const EvalReport& report) {
    std::size_t w_protocol = 8;
    std::size_t w_cell = 4;
    for (const auto& c : report.cells) {
        w_protocol = std::max(w_protocol, c.protocol.size());
        w_cell = std::max(w_cell, c.cell.size());
    }
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-*s  %-*s  %9s  %9s  %7s  %7s\n", static_cast<int>(w_protocol), "protocol",
                  static_cast<int>(w_cell), "cell", "Acc(%)", "AUC(%)", "n_pos", "n_neg");
    out += buf;
    for (const auto& c : report.cells) {
        std::snprintf(buf, sizeof buf, "%-*s  %-*s  %9s  %9s  %7zu  %7zu\n", static_cast<int>(w_protocol),
                      c.protocol.c_str(), static_cast<int>(w_cell), c.cell.c_str(), metric(c.acc, "n/e").c_str(),
                      metric(c.auc, "n/e").c_str(), c.n_pos, c.n_neg);
        out += buf;
    }
    return out;
}

std::string render_tsv(const EvalReport& report) {
    std::string out = "protocol\tcell\tacc\tauc\tn_pos\tn_neg\n";
    for (const auto& c : report.cells)
        out += c.protocol + "\t" + c.cell + "\t" + metric(c.acc, "NA") + "\t" + metric(c.auc, "NA") + "\t" +
               std::to_string(c.n_pos) + "\t" + std::to_string(c.n_neg) + "\n";
    return out;
}

}  // namespace hierlabel
