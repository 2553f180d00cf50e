// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hierlabel/bilevel.hpp"
#include "hierlabel/model.hpp"
#include "hierlabel/synthdata.hpp"

namespace hierlabel {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "HIERLABEL_OUT";

/// Experiment description read by `train` (and optionally `eval`), JSON-encoded. Relative
/// paths resolve against the config file's directory.
struct ExperimentConfig {
    std::string graph = "default";     // graph config path or "default"
    std::string dataset;               // dataset file; when empty the scenario is generated
    std::string scenario = "default";  // scenario JSON path or "default"
    std::size_t n_real = 1000;
    std::size_t n_fake_per_method = 80;
    Architecture architecture = Architecture::linear;
    std::size_t hidden = 0;
    Strategy strategy = Strategy::so;
    std::optional<std::vector<double>> given_weights;
    Protocol protocol = Protocol::intra;
    std::string held_out;  // p2: attribute name; p1: comma-separated method ids
    std::array<double, 3> split_ratios{7.8, 1.1, 1.1};
    BilevelConfig trainer;
    std::string out;
    std::uint64_t seed = 0;
};

/// Throws Error(config) on unknown tags or malformed fields, Error(io) on a missing file.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::string& base_dir = ".");

/// Builds the split request an experiment describes.
SplitRequest split_request(const ExperimentConfig& config, const LabelGraph& graph);

/// Entry point shared by the executable and the tests. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hierlabel
