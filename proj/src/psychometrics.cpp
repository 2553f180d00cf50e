// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/psychometrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "hierlabel/error.hpp"

namespace hierlabel {

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_cdf(double z) noexcept {
    if (z > -30.0) return std::log(normal_cdf(z));
    // Asymptotic expansion of the Mills ratio in the far lower tail.
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

namespace {

// φ(t) / Φ(t), the derivative of log Φ.
double mills(double t) noexcept {
    const double log_pdf = -0.5 * t * t - 0.5 * std::log(2.0 * std::numbers::pi);
    return std::exp(log_pdf - log_normal_cdf(t));
}

struct Grouped {
    double degree;
    double ones;
    double zeros;
};

std::vector<Grouped> group(std::span<const PsychTrial> trials) {
    std::map<double, std::pair<double, double>> by_degree;
    for (const auto& t : trials) {
        auto& [ones, zeros] = by_degree[t.degree];
        (t.response ? ones : zeros) += 1.0;
    }
    std::vector<Grouped> out;
    out.reserve(by_degree.size());
    for (const auto& [d, c] : by_degree) out.push_back({d, c.first, c.second});
    return out;
}

struct Derivatives {
    double value = 0.0;
    std::array<double, 2> grad{};     // d/d(mu), d/d(log sigma)
    std::array<double, 4> hess{};     // row-major 2x2
};

// Log-likelihood (plus optional ridge on log σ) with exact first and second derivatives.
Derivatives evaluate(const std::vector<Grouped>& data, double mu, double log_sigma, int direction, double ridge,
                     double log_sigma_ref) {
    const double sigma = std::exp(log_sigma);
    Derivatives out;
    for (const auto& g : data) {
        const double z = direction * (g.degree - mu) / sigma;
        // dz/dmu = −direction/σ, dz/ds = −z, d²z/dmu² = 0, d²z/dmu ds = direction/σ, d²z/ds² = z.
        const double dz_mu = -direction / sigma;
        const double dz_s = -z;
        for (int q : {1, -1}) {
            const double count = q == 1 ? g.ones : g.zeros;
            if (count == 0.0) continue;
            const double t = q * z;
            const double lam = mills(t);
            const double d1 = q * lam;             // dℓ/dz
            const double d2 = -lam * (t + lam);    // d²ℓ/dz²
            out.value += count * log_normal_cdf(t);
            out.grad[0] += count * d1 * dz_mu;
            out.grad[1] += count * d1 * dz_s;
            out.hess[0] += count * d2 * dz_mu * dz_mu;
            const double cross = count * (d2 * dz_mu * dz_s + d1 * direction / sigma);
            out.hess[1] += cross;
            out.hess[2] += cross;
            out.hess[3] += count * (d2 * dz_s * dz_s + d1 * z);
        }
    }
    if (ridge > 0.0) {
        const double dev = log_sigma - log_sigma_ref;
        out.value -= 0.5 * ridge * dev * dev;
        out.grad[1] -= ridge * dev;
        out.hess[3] -= ridge;
    }
    return out;
}

}  // namespace

double PsychometricFit::probability(double degree) const noexcept {
    return normal_cdf(direction * (degree - mu) / sigma);
}

SimulatedObserver::SimulatedObserver(double true_mu, double true_sigma, double lapse_rate, std::uint64_t seed)
    : mu_(true_mu), sigma_(true_sigma), lapse_(lapse_rate), rng_(seed) {
    if (!(true_sigma > 0.0) || !std::isfinite(true_sigma)) throw Error(ErrorKind::input, "observer sigma must be > 0");
    if (!(lapse_rate >= 0.0 && lapse_rate <= 0.1)) throw Error(ErrorKind::input, "lapse rate must lie in [0, 0.1]");
    if (!std::isfinite(true_mu)) throw Error(ErrorKind::input, "observer mu must be finite");
}

double SimulatedObserver::probability(double degree) const noexcept {
    return (1.0 - lapse_) * normal_cdf((degree - mu_) / sigma_) + 0.5 * lapse_;
}

std::vector<PsychTrial> staircase_run(SimulatedObserver& observer, double start_degree, double step, std::size_t n_trials) {
    if (!(step > 0.0)) throw Error(ErrorKind::input, "staircase step must be > 0");
    if (n_trials == 0) throw Error(ErrorKind::input, "staircase needs at least one trial");
    if (!std::isfinite(start_degree)) throw Error(ErrorKind::input, "start degree must be finite");
    std::vector<PsychTrial> trials;
    trials.reserve(n_trials);
    // Degrees are start + k·step for integer k, so repeated visits hit identical values.
    long long level = 0;
    for (std::size_t t = 0; t < n_trials; ++t) {
        const double degree = start_degree + static_cast<double>(level) * step;
        const bool response = observer.respond(degree);
        trials.push_back({degree, response});
        level += response ? -1 : 1;
    }
    return trials;
}

std::vector<double> visited_degrees(std::span<const PsychTrial> trials) {
    std::vector<double> out;
    for (const auto& t : trials) out.push_back(t.degree);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<PsychTrial> collect_responses(SimulatedObserver& observer, std::span<const double> degrees,
                                          std::size_t responses_per_degree) {
    std::vector<PsychTrial> out;
    out.reserve(degrees.size() * responses_per_degree);
    for (double d : degrees)
        for (std::size_t r = 0; r < responses_per_degree; ++r) out.push_back({d, observer.respond(d)});
    return out;
}

double psychometric_log_likelihood(std::span<const PsychTrial> trials, double mu, double sigma, int direction) {
    double ll = 0.0;
    for (const auto& t : trials) {
        const double z = direction * (t.degree - mu) / sigma;
        ll += log_normal_cdf(t.response ? z : -z);
    }
    return ll;
}

PsychometricFit fit_psychometric(std::span<const PsychTrial> trials, const FitOptions& options) {
    if (trials.size() < 10) throw Error(ErrorKind::degenerate_data, "need at least 10 trials, got " + std::to_string(trials.size()));
    double mean_d = 0.0;
    double mean_r = 0.0;
    for (const auto& t : trials) {
        if (!std::isfinite(t.degree)) throw Error(ErrorKind::input, "trial degree is not finite");
        mean_d += t.degree;
        mean_r += t.response ? 1.0 : 0.0;
    }
    mean_d /= static_cast<double>(trials.size());
    mean_r /= static_cast<double>(trials.size());
    if (mean_r == 0.0 || mean_r == 1.0) throw Error(ErrorKind::degenerate_data, "all responses are identical");
    double var_d = 0.0;
    double cov = 0.0;
    for (const auto& t : trials) {
        var_d += (t.degree - mean_d) * (t.degree - mean_d);
        cov += (t.degree - mean_d) * ((t.response ? 1.0 : 0.0) - mean_r);
    }
    var_d /= static_cast<double>(trials.size());
    const auto [lo, hi] = std::minmax_element(trials.begin(), trials.end(),
                                              [](const PsychTrial& a, const PsychTrial& b) { return a.degree < b.degree; });
    if (lo->degree == hi->degree) throw Error(ErrorKind::degenerate_data, "all trials share one degree");
    const int direction = cov < 0.0 ? -1 : 1;
    const double log_sigma_ref = 0.5 * std::log(var_d);

    const auto data = group(trials);
    // Start at the mean degree with σ equal to the degree spread.
    double mu = mean_d;
    double s = log_sigma_ref;
    Derivatives cur = evaluate(data, mu, s, direction, options.ridge, log_sigma_ref);
    std::size_t iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (std::hypot(cur.grad[0], cur.grad[1]) < options.gradient_tolerance) break;
        // Newton on the negative log-likelihood: solve (−H + τI) δ = g, raising τ until the
        // system is positive definite; then backtrack until the likelihood does not drop.
        const double a0 = -cur.hess[0];
        const double b0 = -cur.hess[1];
        const double c0 = -cur.hess[3];
        double tau = 0.0;
        double da = 0.0;
        double ds = 0.0;
        for (int attempt = 0; attempt < 60; ++attempt) {
            const double a = a0 + tau;
            const double c = c0 + tau;
            const double det = a * c - b0 * b0;
            if (a > 0.0 && det > 0.0) {
                da = (c * cur.grad[0] - b0 * cur.grad[1]) / det;
                ds = (a * cur.grad[1] - b0 * cur.grad[0]) / det;
                break;
            }
            tau = tau == 0.0 ? 1e-8 * (1.0 + std::abs(a0) + std::abs(c0)) : tau * 10.0;
        }
        // Cap the log σ move so a single step cannot overflow σ.
        const double cap = 2.0;
        if (std::abs(ds) > cap) {
            da *= cap / std::abs(ds);
            ds = std::copysign(cap, ds);
        }
        // Near the optimum the true change falls below the rounding of the summed
        // log-likelihood; allow that much slack so Newton can finish.
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(cur.value);
        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half, scale *= 0.5) {
            const Derivatives next = evaluate(data, mu + scale * da, s + scale * ds, direction, options.ridge, log_sigma_ref);
            if (std::isfinite(next.value) && next.value >= cur.value - slack) {
                mu += scale * da;
                s += scale * ds;
                cur = next;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    const double grad_norm = std::hypot(cur.grad[0], cur.grad[1]);
    if (!(grad_norm < options.gradient_tolerance)) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "fit did not converge after %zu iterations (mu=%.9g sigma=%.9g |grad|=%.3g)",
                      iter, mu, std::exp(s), grad_norm);
        throw Error(ErrorKind::convergence, buf);
    }
    PsychometricFit fit;
    fit.mu = mu;
    fit.sigma = std::exp(s);
    fit.direction = direction;
    fit.threshold_75 = mu + direction * kQuantile75 * fit.sigma;
    fit.log_likelihood = psychometric_log_likelihood(trials, fit.mu, fit.sigma, direction);
    fit.trial_count = trials.size();
    fit.iterations = iter;
    return fit;
}

PerceptLabel degree_to_label(const PsychometricFit& fit, double degree) noexcept {
    return fit.direction * (degree - fit.threshold_75) >= 0.0 ? PerceptLabel::fake : PerceptLabel::real;
}

std::vector<PsychTrial> parse_trials(std::string_view text) {
    std::vector<PsychTrial> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::replace(line.begin(), line.end(), '\t', ' ');
        std::istringstream fields(line);
        std::string a;
        std::string b;
        std::string extra;
        if (!(fields >> a)) continue;
        if (line_no == 1 && a == "degree") continue;  // optional header
        if (!(fields >> b) || (fields >> extra))
            throw Error(ErrorKind::input, "trials line " + std::to_string(line_no) + ": expected 'degree response'");
        double degree = 0.0;
        try {
            std::size_t used = 0;
            degree = std::stod(a, &used);
            if (used != a.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorKind::input, "trials line " + std::to_string(line_no) + ": bad degree '" + a + "'");
        }
        if (!std::isfinite(degree))
            throw Error(ErrorKind::input, "trials line " + std::to_string(line_no) + ": degree is not finite");
        if (b != "0" && b != "1")
            throw Error(ErrorKind::input, "trials line " + std::to_string(line_no) + ": response must be 0 or 1");
        out.push_back({degree, b == "1"});
    }
    return out;
}

std::string format_trials(std::span<const PsychTrial> trials) {
    std::string out = "degree\tresponse\n";
    char buf[64];
    for (const auto& t : trials) {
        std::snprintf(buf, sizeof buf, "%.17g\t%d\n", t.degree, t.response ? 1 : 0);
        out += buf;
    }
    return out;
}

std::string format_fit(const PsychometricFit& fit) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "mu %.17g\nsigma %.17g\ndirection %d\nthreshold_75 %.17g\nlog_likelihood %.17g\nn %zu\n", fit.mu,
                  fit.sigma, fit.direction, fit.threshold_75, fit.log_likelihood, fit.trial_count);
    return buf;
}

}  // namespace hierlabel
