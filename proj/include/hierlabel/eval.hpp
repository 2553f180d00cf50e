// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hierlabel/inference.hpp"
#include "hierlabel/model.hpp"
#include "hierlabel/synthdata.hpp"

namespace hierlabel {

/// Percentage of samples with (prediction >= threshold) == label.
/// Throws Error(input) on empty input, Error(dimension) on a length mismatch.
double accuracy(std::span<const double> predictions, std::span<const int> labels, double threshold = 0.5);

/// Mann-Whitney AUC as a percentage: ranks with averaged ties, so tied positive/negative
/// pairs count one half. O(n log n). Throws Error(input) unless both classes are present.
double auc(std::span<const double> predictions, std::span<const int> labels);

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

/// Operating points of the rule `prediction >= threshold`, one per distinct prediction,
/// thresholds descending.
std::vector<RocPoint> roc_points(std::span<const double> predictions, std::span<const int> labels);

/// How the primary probability is read off the scores.
enum class PredictionHead {
    hierarchical,  // marginal of the root under the label hierarchy
    independent,   // sigmoid of the root score alone
};

std::vector<double> primary_predictions(const StateSpace& space, const ScorerParams& params, PredictionHead head,
                                        std::span<const SyntheticSample> samples, std::span<const std::size_t> indices);

struct CellSpec {
    std::string name;
    std::vector<std::size_t> indices;  // into the sample list
};

struct EvalCell {
    std::string protocol;
    std::string cell;
    std::optional<double> acc;  // empty: not evaluable
    std::optional<double> auc;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

struct EvalReport {
    std::vector<EvalCell> cells;
};

/// Cells for a split's test part: "overall", one per attribute (test reals plus test fakes
/// whose state has that attribute), and under p1 one per held-out method.
std::vector<CellSpec> default_cells(const LabelGraph& graph, std::span<const SyntheticSample> samples,
                                    const SplitPlan& plan);

/// Primary-task Acc/AUC per cell. Empty cells have neither metric; single-class cells have
/// no AUC.
EvalReport evaluate(const StateSpace& space, const ScorerParams& params, PredictionHead head,
                    std::span<const SyntheticSample> samples, std::span<const CellSpec> cells,
                    const std::string& protocol);

/// Aligned plain-text table; missing metrics print as "n/e" (not evaluable).
std::string render_table(const EvalReport& report);
/// Tab-separated: protocol, cell, acc, auc, n_pos, n_neg; missing metrics as "NA".
std::string render_tsv(const EvalReport& report);

}  // namespace hierlabel
