#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "merchant/rng.hpp"
#include "merchant/stats.hpp"

namespace merchant {

// Discrete time scale of the Brownian device. The equidistant scale has
// unit steps; a perturbed scale has steps delta_m in (0,1) whose defect sum
// sum(1 - delta_m) converges, so the infinite product of the deltas is a
// positive number. The built-in "exp2" generator is delta_m = exp(-2^-m),
// whose infinite product is exactly exp(-1).
class TimeScale {
public:
    static TimeScale equidistant();
    static TimeScale exp2();
    static TimeScale custom(std::vector<double> deltas);  // delta = 1 past the list
    static TimeScale by_name(const std::string& name);    // "equidistant" | "exp2"

    bool perturbed() const { return kind_ != Kind::Equidistant; }
    const std::string& name() const { return name_; }

    double delta(std::int64_t m) const;      // step length, m >= 1
    double log_delta(std::int64_t m) const;
    double weight(std::int64_t m) const;     // (1 - delta_m) / delta_m
    double time(std::int64_t l) const;       // t_l = sum_{m<=l} delta_m
    double log_product_prefix(std::int64_t n) const;  // sum_{m<=n} log delta_m
    double log_product_total() const;                 // sum over all m

private:
    enum class Kind { Equidistant, Exp2, Custom };
    TimeScale(Kind kind, std::string name, std::vector<double> deltas);

    Kind kind_;
    std::string name_;
    std::vector<double> deltas_;       // custom only
    std::vector<double> prefix_time_;  // custom only
    std::vector<double> prefix_log_;   // custom only
};

// Discrete Brownian path pinned at the origin: positions x_0..x_N at the
// scale's times, x_0 = 0.
struct Trajectory {
    std::vector<double> times;      // length N+1, times[0] = 0
    std::vector<double> positions;  // length N+1, positions[0] = 0

    std::int64_t length() const { return static_cast<std::int64_t>(positions.size()) - 1; }
};

// Cylinder set: the path must pass through the open gate (lo, hi) at each
// listed time. Infinite endpoints describe half-lines or the full line.
struct Gate {
    double lo;
    double hi;
};
struct GateSpec {
    std::vector<double> times;
    std::vector<Gate> gates;

    void validate() const;
};

// Heat-kernel transition density: exp(-|x-y|^2/(t-s)) / sqrt(pi (t-s)).
// One step of length delta therefore has increment variance delta/2.
double green(double x, double t, double y, double s);

Trajectory sample_trajectory(const TimeScale& scale, std::int64_t length, RngStream& stream);
Trajectory sample_trajectory(const TimeScale& scale, std::int64_t length, std::uint64_t seed,
                             std::uint64_t trial_index = 0);

// Wiener measure of the cylinder set by iterated quadrature over the gates
// (at most 3 gates; larger specs are Monte Carlo territory). The ungated
// integral is computed the same way and must come back as 1; both paths are
// compared before the ratio is returned.
double cylinder_measure(const GateSpec& spec, const TimeScale& scale);

// Plain and weighted discrete Sobolev square norms of the truncated path:
// sum |x_m - x_{m-1}|^2 and sum ((1-delta_m)/delta_m)|x_m - x_{m-1}|^2.
double sobolev_norm_sq(const Trajectory& traj);

struct WeightedSobolev {
    double value = 0.0;
    bool zero_weights = false;  // equidistant scale: every weight vanishes
};
WeightedSobolev weighted_sobolev_norm_sq(const Trajectory& traj, const TimeScale& scale);

// max_m x_m^2 / t_m < C over the truncated path (m >= 1).
bool is_quasi_loop(const Trajectory& traj, double c);

// Density of the perturbed measure against the equidistant one on the first
// N increments: exp(-weighted norm) / prod sqrt(delta_m), m <= N, evaluated
// in log domain. Averages to exactly 1 over equidistant-sampled paths.
double radon_nikodym_weight(const Trajectory& traj, const TimeScale& scale);

// Brownian indistinguishable set: ((1+gamma)^T - 1) x_j^2 < eps * ||x||_1^2
// with the weighted Sobolev norm of the scale; strict inequality.
bool in_indistinguishable_brownian(const Trajectory& traj, std::int64_t j, double gamma,
                                   double epsilon, double t_exponent, const TimeScale& scale);

struct WienerBound {
    double raw = 0.0;      // sqrt(eps / (((1+gamma)^T - 1 - eps) * prod delta_m))
    double clamped = 0.0;  // min(raw, 1) for reporting
};
// Requires (1+gamma)^T > 1 + eps, else BoundNotApplicable.
WienerBound wiener_bound(double epsilon, double gamma, double t_exponent, const TimeScale& scale);

// Stopping time with bound eta: log_{1+gamma}(eps / (eta^2 prod delta_m) + 1 + eps).
double t_eta_brownian(double epsilon, double gamma, double eta, const TimeScale& scale);

enum class FalseIndexMode {
    kInjected,  // membership tested at the known injected index j
    kSupremum   // "for some j <= N": union over indices, conservative
};

struct WienerMcResult {
    McEstimate direct;            // sampled under the perturbed measure
    WeightedEstimate reweighted;  // sampled under the equidistant measure, reweighted
    double joint_diff = 0.0;      // |direct - reweighted|
    double joint_std_err = 0.0;   // sqrt(se_d^2 + se_r^2)
    bool agree_3se = false;
    std::optional<double> bound_raw;  // absent when the bound is not applicable
    std::optional<double> bound_clamped;
};

// Monte Carlo estimate of the perturbed-measure mass of the Brownian
// indistinguishable set at truncation N, by both sampling routes.
// quasi_loop_c = infinity (the default) admits every path, matching the
// full-measure quasi-loop class.
WienerMcResult mc_wiener_indistinguishable(std::int64_t j, double gamma, double epsilon,
                                           double t_exponent, const TimeScale& scale,
                                           std::int64_t length, std::int64_t trials,
                                           std::uint64_t seed,
                                           FalseIndexMode mode = FalseIndexMode::kInjected,
                                           double quasi_loop_c =
                                               std::numeric_limits<double>::infinity(),
                                           int threads = 0);

// Fraction of sampled paths that are quasi-loops at constant C.
McEstimate mc_quasi_loop_fraction(const TimeScale& scale, std::int64_t length, double c,
                                  std::int64_t trials, std::uint64_t seed, int threads = 0);

struct ReflectionTail {
    McEstimate max_exceeds;  // P(max_{m<=N} |x_m| > a)
    McEstimate end_exceeds;  // P(|x_N| > a)
};
// Empirical check material for the reflection principle on the equidistant
// walk: P(max |x_m| > a) <= 2 P(|x_N| > a).
ReflectionTail reflection_tail_estimate(const TimeScale& scale, std::int64_t length, double a,
                                        std::int64_t trials, std::uint64_t seed, int threads = 0);

struct BrownianPosterior {
    double lower_bound = 0.0;  // 1 - ((1-P)/P) * bound, may be vacuous (< 0)
    double point = 0.0;        // P / (P + (1-P) * min(bound, 1))
};
BrownianPosterior bayes_posterior_brownian(double prior_no_false, double epsilon, double gamma,
                                           double t_exponent, const TimeScale& scale);

}  // namespace merchant
