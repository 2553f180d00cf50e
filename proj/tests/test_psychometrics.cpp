// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "hierlabel/error.hpp"
#include "hierlabel/psychometrics.hpp"

namespace hierlabel {
namespace {

std::vector<PsychTrial> simulated(std::uint64_t seed, double mu = 0.2, double sigma = 0.05, std::size_t per = 300) {
    SimulatedObserver obs(mu, sigma, 0.0, seed);
    const auto run = staircase_run(obs, 0.0, 0.02, 300);
    const auto degrees = visited_degrees(run);
    return collect_responses(obs, degrees, per);
}

TEST(Psychometrics, NormalCdf) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(normal_cdf(kQuantile75), 0.75, 1e-15);
    EXPECT_NEAR(normal_cdf(-1.959963984540054), 0.025, 1e-15);
    EXPECT_NEAR(log_normal_cdf(-1.0), std::log(normal_cdf(-1.0)), 1e-14);
    // Deep tail: log Φ(z) ≈ −z²/2 − log(−z) − ½ log 2π.
    const double z = -40.0;
    EXPECT_NEAR(log_normal_cdf(z), -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * M_PI) - 1.0 / (z * z), 1e-6);
    EXPECT_TRUE(std::isfinite(log_normal_cdf(-1e4)));
}

TEST(Psychometrics, ThresholdIdentityIsExact) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto fit = fit_psychometric(simulated(seed));
        EXPECT_NEAR(fit.threshold_75 - fit.mu, fit.direction * kQuantile75 * fit.sigma, 2.0 * DBL_EPSILON * std::abs(fit.threshold_75));
        EXPECT_NEAR(fit.probability(fit.threshold_75), 0.75, 1e-12);
    }
}

TEST(Psychometrics, RecoversThreshold) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed)
        if (std::abs(fit_psychometric(simulated(seed)).threshold_75 - 0.233725) <= 0.02) ++hits;
    EXPECT_GE(hits, 45);
}

// Standard errors of (mu, sigma) from the inverse Fisher information of a probit design.
std::pair<double, double> fisher_standard_errors(std::span<const double> grid, std::size_t per, double mu, double sigma) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (double d : grid) {
        const double z = (d - mu) / sigma;
        const double p = normal_cdf(z);
        const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        const double dm = -phi / sigma, ds = -phi * z / sigma;
        const double w = static_cast<double>(per) / (p * (1.0 - p));
        a += w * dm * dm;
        b += w * dm * ds;
        c += w * ds * ds;
    }
    const double det = a * c - b * b;
    return {std::sqrt(c / det), std::sqrt(a / det)};
}

TEST(Psychometrics, ConsistencyWithManyTrials) {
    std::vector<double> grid;
    for (int k = 0; k < 10; ++k) grid.push_back(0.2 + 0.02 * (k - 4.5));
    const auto [se_mu, se_sigma] = fisher_standard_errors(grid, 300, 0.2, 0.05);
    int good = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SimulatedObserver obs(0.2, 0.05, 0.0, 1000 + seed);
        const auto fit = fit_psychometric(collect_responses(obs, grid, 300));
        if (std::abs(fit.mu - 0.2) < 3.0 * se_mu && std::abs(fit.sigma - 0.05) < 3.0 * se_sigma) ++good;
    }
    EXPECT_GE(good, 95);
}

TEST(Psychometrics, FitIsLocalMaximum) {
    const auto trials = simulated(3);
    const auto fit = fit_psychometric(trials);
    const double best = psychometric_log_likelihood(trials, fit.mu, fit.sigma, fit.direction);
    EXPECT_DOUBLE_EQ(best, fit.log_likelihood);
    for (double dm : {-1e-3, 1e-3})
        for (double ds : {0.98, 1.02}) EXPECT_LT(psychometric_log_likelihood(trials, fit.mu + dm, fit.sigma * ds, fit.direction), best);
}

TEST(Psychometrics, RidgedSeparableFitMatchesGridSearch) {
    const double center = 0.5;
    std::vector<PsychTrial> trials;
    for (int k = 1; k <= 5; ++k)
        for (int rep = 0; rep < 4; ++rep) {
            trials.push_back({center - 0.05 * k, false});
            trials.push_back({center + 0.05 * k, true});
        }
    FitOptions opt;
    opt.ridge = 2.0;
    const auto fit = fit_psychometric(trials, opt);

    double mean = 0.0, var = 0.0;
    for (const auto& t : trials) mean += t.degree;
    mean /= static_cast<double>(trials.size());
    for (const auto& t : trials) var += (t.degree - mean) * (t.degree - mean);
    const double log_ref = 0.5 * std::log(var / static_cast<double>(trials.size()));
    double best = -INFINITY, best_mu = 0.0, best_s = 0.0;
    for (double mu = 0.4; mu <= 0.6; mu += 0.0005)
        for (double s = std::log(1e-4); s <= std::log(0.5); s += 0.002) {
            const double v = psychometric_log_likelihood(trials, mu, std::exp(s), 1) - 0.5 * opt.ridge * (s - log_ref) * (s - log_ref);
            if (v > best) {
                best = v;
                best_mu = mu;
                best_s = s;
            }
        }
    EXPECT_NEAR(fit.mu, center, 1e-6);
    EXPECT_NEAR(fit.mu, best_mu, 5e-4);
    EXPECT_NEAR(std::log(fit.sigma), best_s, 4e-3);
}

TEST(Psychometrics, StaircaseConcentratesNearMidpoint) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SimulatedObserver obs(0.2, 0.05, 0.0, seed);
        const auto run = staircase_run(obs, 0.0, 0.02, 300);
        bool ok = true;
        for (std::size_t t = 200; t < run.size(); ++t) ok = ok && std::abs(run[t].degree - 0.2) <= 3 * 0.02 + 1e-12;
        std::vector<double> tail;
        for (std::size_t t = 100; t < run.size(); ++t) tail.push_back(run[t].degree);
        std::nth_element(tail.begin(), tail.begin() + tail.size() / 2, tail.end());
        ok = ok || std::abs(tail[tail.size() / 2] - 0.2) <= 0.02 + 1e-12;
        if (ok) ++hits;
    }
    EXPECT_GE(hits, 90);
}

TEST(Psychometrics, DecreasingDirection) {
    auto trials = simulated(8);
    for (auto& t : trials) t.degree = -t.degree;
    const auto fit = fit_psychometric(trials);
    EXPECT_EQ(fit.direction, -1);
    EXPECT_NEAR(fit.threshold_75, -0.2337, 0.02);
    EXPECT_EQ(degree_to_label(fit, -0.25), PerceptLabel::fake);
    EXPECT_EQ(degree_to_label(fit, -0.05), PerceptLabel::real);
}

TEST(Psychometrics, LabelsFromIncreasingFit) {
    const auto fit = fit_psychometric(simulated(2));
    EXPECT_EQ(degree_to_label(fit, 0.30), PerceptLabel::fake);
    EXPECT_EQ(degree_to_label(fit, 0.10), PerceptLabel::real);
    EXPECT_EQ(degree_to_label(fit, fit.threshold_75), PerceptLabel::fake);
}

TEST(Psychometrics, LapseObserverStillNearThreshold) {
    SimulatedObserver obs(0.2, 0.05, 0.02, 5);
    EXPECT_NEAR(obs.probability(-10.0), 0.01, 1e-12);
    EXPECT_NEAR(obs.probability(10.0), 0.99, 1e-12);
}

TEST(Psychometrics, DegenerateInputs) {
    const auto kind_of = [](std::vector<PsychTrial> t) {
        try {
            fit_psychometric(t);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::io;
    };
    EXPECT_EQ(kind_of({}), ErrorKind::degenerate_data);
    EXPECT_EQ(kind_of(std::vector<PsychTrial>(20, {0.3, true})), ErrorKind::degenerate_data);
    std::vector<PsychTrial> one_level;
    for (int k = 0; k < 20; ++k) one_level.push_back({0.3, k % 2 == 0});
    EXPECT_EQ(kind_of(one_level), ErrorKind::degenerate_data);
    FitOptions one_step;
    one_step.max_iterations = 1;
    try {
        fit_psychometric(simulated(1), one_step);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::convergence);
        EXPECT_NE(std::string(e.what()).find("mu="), std::string::npos);
    }
}

TEST(Psychometrics, SeparableWithoutRidgeSplitsTheGap) {
    std::vector<PsychTrial> separable;
    for (int k = 0; k < 20; ++k) separable.push_back({0.1 * k, k >= 10});
    const auto fit = fit_psychometric(separable);
    EXPECT_NEAR(fit.mu, 0.95, 1e-6);
    EXPECT_LT(fit.sigma, 0.02);
}

TEST(Psychometrics, AffineEquivariance) {
    auto trials = simulated(6);
    const auto base = fit_psychometric(trials);
    for (auto& t : trials) t.degree *= 10.0;
    const auto scaled = fit_psychometric(trials);
    EXPECT_NEAR(scaled.mu, 10.0 * base.mu, 1e-8);
    EXPECT_NEAR(scaled.sigma, 10.0 * base.sigma, 1e-8);
    EXPECT_NEAR(scaled.threshold_75, 10.0 * base.threshold_75, 1e-8);
}

TEST(Psychometrics, TrialsRoundTrip) {
    const auto trials = simulated(1, 0.2, 0.05, 3);
    EXPECT_EQ(parse_trials(format_trials(trials)).size(), trials.size());
    const auto parsed = parse_trials("degree,response\n0.1,0\n0.2\t1\n# note\n0.3 1\n");
    ASSERT_EQ(parsed.size(), 3u);
    EXPECT_EQ(parsed[1].degree, 0.2);
    EXPECT_TRUE(parsed[1].response);
    try {
        parse_trials("0.1 0\n0.2 maybe\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::input);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Psychometrics, ObserverValidation) {
    EXPECT_THROW(SimulatedObserver(0.2, 0.0, 0.0, 1), Error);
    EXPECT_THROW(SimulatedObserver(0.2, 0.05, 0.2, 1), Error);
}

}  // namespace
}  // namespace hierlabel
