#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace merchant {

// A row of coin stacks in which at most one stack holds heavy (false) coins.
// True coins weigh base_weight = 1 gram, false coins 1 + gamma grams.
// n_stacks == nullopt models the countable system; q(i) answers for any i.
class CoinSystem {
public:
    static CoinSystem all_true(std::int64_t n_stacks);
    static CoinSystem with_false(std::int64_t n_stacks, std::int64_t false_stack, double gamma);
    static CoinSystem countable_all_true();
    static CoinSystem countable_with_false(std::int64_t false_stack, double gamma);

    static constexpr double base_weight = 1.0;

    // Per-coin weight of stack i (1-based); defined for every i >= 1.
    double q(std::int64_t i) const;

    std::optional<std::int64_t> n_stacks() const { return n_stacks_; }
    std::optional<std::int64_t> false_stack() const { return false_stack_; }
    double gamma() const { return gamma_; }
    bool countable() const { return !n_stacks_.has_value(); }

private:
    CoinSystem(std::optional<std::int64_t> n, std::optional<std::int64_t> j, double gamma);

    std::optional<std::int64_t> n_stacks_;
    std::optional<std::int64_t> false_stack_;  // 1-based; absent <=> all true
    double gamma_;
};

// Detection parameters shared by the finite and Brownian devices.
struct DeviceConfig {
    double epsilon;  // sensitivity, > 0
    double eta;      // probability threshold, in (0,1)
    double gamma;    // false-coin excess weight, in (0,1)

    void validate() const;
};

// A finite real probe vector with its squared norm as summed once.
class TestVector {
public:
    explicit TestVector(std::vector<double> coords);

    const std::vector<double>& coords() const { return coords_; }
    double norm_sq() const { return norm_sq_; }
    std::int64_t dim() const { return static_cast<std::int64_t>(coords_.size()); }
    double operator[](std::int64_t i) const { return coords_[static_cast<std::size_t>(i)]; }

private:
    std::vector<double> coords_;
    double norm_sq_;
};

// (1+gamma)^t - 1 evaluated as expm1(t * log1p(gamma)); this log-domain
// order is the normative evaluation used by every quadratic form and bound.
double growth_factor(double gamma, double t);

// Classical single weighing: five stacks, 1..5 coins taken, total
// 15 + gamma * n grams identifies stack n.
std::int64_t classical_weighting(double measured_total, double gamma);

// Base-2 weighing: 2^(i-1) coins from stack i; the excess over the all-true
// total, divided by gamma, reads the false-stack set in binary.
std::set<std::int64_t> base2_weighting(double measured_total, std::int64_t n_stacks, double gamma);

struct QuadraticFormValue {
    double value = 0.0;
    bool overflowed = false;  // growth term exceeded the double range
};

// <Q^t(x), x> in closed form: ||x||^2 plus ((1+gamma)^t - 1) x_j^2 when the
// false stack j lies inside the probe's prefix.
QuadraticFormValue quadratic_form(const CoinSystem& system, const TestVector& x, std::int64_t t);

// Click predicate: <Q^t(x), x> > (1 + epsilon) ||x||^2, strict.
bool clicks(const CoinSystem& system, const TestVector& x, std::int64_t t, double epsilon);

// Smallest integer t with (1+gamma)^t - 1 > epsilon * norm_sq / xj^2.
// Ratio form shared by Gaussian vectors and Brownian trajectories.
std::int64_t first_click_time_ratio(double norm_sq, double xj, double gamma, double epsilon);
std::int64_t first_click_time(const TestVector& x, std::int64_t j, double gamma, double epsilon);

// Computable experiment duration: after T_eta the indistinguishable set of a
// false system has Gaussian probability at most eta.
// T_eta = log_{1+gamma}(3^4 N^3 epsilon / (eta^4 pi^2) + 1).
double t_eta_finite(std::int64_t n_stacks, double epsilon, double gamma, double eta);

// Same formula in extended precision; log base 1+gamma amplifies argument
// error by roughly 1/gamma, which matters when comparing against oracles.
long double t_eta_finite_ext(std::int64_t n_stacks, double epsilon, double gamma, double eta);

}  // namespace merchant
