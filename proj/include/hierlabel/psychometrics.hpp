// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hierlabel/rng.hpp"

namespace hierlabel {

/// Standard-normal 0.75 quantile.
inline constexpr double kQuantile75 = 0.6744897501960817;

double normal_cdf(double z) noexcept;
/// log Φ(z), accurate far into the lower tail.
double log_normal_cdf(double z) noexcept;

struct PsychTrial {
    double degree = 0.0;
    bool response = false;  // true: "perceptually different"
};

struct PsychometricFit {
    double mu = 0.0;
    double sigma = 1.0;
    /// +1 when discriminability grows with the degree, −1 when it shrinks.
    int direction = 1;
    double threshold_75 = 0.0;
    double log_likelihood = 0.0;
    std::size_t trial_count = 0;
    std::size_t iterations = 0;

    /// P(response = 1 | degree) under the fit.
    double probability(double degree) const noexcept;
};

/// Ground-truth observer: P(1 | d) = (1 − lapse) Φ((d − mu) / sigma) + lapse / 2.
class SimulatedObserver {
public:
    SimulatedObserver(double true_mu, double true_sigma, double lapse_rate, std::uint64_t seed);

    double probability(double degree) const noexcept;
    bool respond(double degree) noexcept { return rng_.bernoulli(probability(degree)); }

    double true_mu() const noexcept { return mu_; }
    double true_sigma() const noexcept { return sigma_; }

private:
    double mu_;
    double sigma_;
    double lapse_;
    Rng rng_;
};

/// 1-up/1-down staircase: after a "different" response the degree drops by `step` (less
/// discriminable), otherwise it rises by `step`.
std::vector<PsychTrial> staircase_run(SimulatedObserver& observer, double start_degree, double step, std::size_t n_trials);

/// Distinct degrees visited by a staircase, ascending.
std::vector<double> visited_degrees(std::span<const PsychTrial> trials);

/// `responses_per_degree` fresh responses at each degree, in the given order.
std::vector<PsychTrial> collect_responses(SimulatedObserver& observer, std::span<const double> degrees,
                                          std::size_t responses_per_degree);

struct FitOptions {
    double gradient_tolerance = 1e-8;
    std::size_t max_iterations = 200;
    /// Optional Gaussian penalty −½·ridge·(log σ − log σ_ref)² keeping σ finite on separable
    /// data; σ_ref is the standard deviation of the degrees. Zero gives the plain MLE.
    double ridge = 0.0;
};

/// Maximum-likelihood Gaussian-CDF fit by damped Newton on (mu, log sigma). The direction is
/// taken from the sign of the degree/response covariance. Throws Error(degenerate_data) when
/// every response is equal or there are fewer than 10 trials, Error(convergence) (with the
/// last iterate in the message) when the tolerance is not reached.
PsychometricFit fit_psychometric(std::span<const PsychTrial> trials, const FitOptions& options = {});

/// Log-likelihood of the trials at (mu, sigma, direction).
double psychometric_log_likelihood(std::span<const PsychTrial> trials, double mu, double sigma, int direction);

enum class PerceptLabel { real, fake };

/// Fake iff the degree lies on the discriminable side of threshold_75, boundary included.
PerceptLabel degree_to_label(const PsychometricFit& fit, double degree) noexcept;

/// Reads `degree<sep>response` lines (tab, comma or space separated; `#` comments).
/// Throws Error(input) with the line number on a malformed row.
std::vector<PsychTrial> parse_trials(std::string_view text);
std::string format_trials(std::span<const PsychTrial> trials);
/// `key value` lines: mu, sigma, direction, threshold_75, log_likelihood, n.
std::string format_fit(const PsychometricFit& fit);

}  // namespace hierlabel
