#include "merchant/coins.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "merchant/errors.hpp"

namespace merchant {

namespace {

void check_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidConfig("gamma must lie in (0,1)");
}

}  // namespace

CoinSystem::CoinSystem(std::optional<std::int64_t> n, std::optional<std::int64_t> j, double gamma)
    : n_stacks_(n), false_stack_(j), gamma_(gamma) {
    if (n && *n < 1) throw InvalidConfig("CoinSystem: n_stacks must be positive");
    if (j) {
        check_gamma(gamma);
        if (*j < 1) throw InvalidConfig("CoinSystem: false stack index must be >= 1");
        if (n && *j > *n) throw InvalidConfig("CoinSystem: false stack index exceeds n_stacks");
    }
}

CoinSystem CoinSystem::all_true(std::int64_t n_stacks) {
    return CoinSystem(n_stacks, std::nullopt, 0.0);
}

CoinSystem CoinSystem::with_false(std::int64_t n_stacks, std::int64_t false_stack, double gamma) {
    return CoinSystem(n_stacks, false_stack, gamma);
}

CoinSystem CoinSystem::countable_all_true() {
    return CoinSystem(std::nullopt, std::nullopt, 0.0);
}

CoinSystem CoinSystem::countable_with_false(std::int64_t false_stack, double gamma) {
    return CoinSystem(std::nullopt, false_stack, gamma);
}

double CoinSystem::q(std::int64_t i) const {
    if (i < 1) throw IndexError("CoinSystem::q: stack index must be >= 1");
    if (n_stacks_ && i > *n_stacks_) throw IndexError("CoinSystem::q: stack index exceeds n_stacks");
    return (false_stack_ && i == *false_stack_) ? base_weight + gamma_ : base_weight;
}

void DeviceConfig::validate() const {
    if (!(epsilon > 0.0)) throw InvalidConfig("DeviceConfig: epsilon must be positive");
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidConfig("DeviceConfig: eta must lie in (0,1)");
    check_gamma(gamma);
}

TestVector::TestVector(std::vector<double> coords) : coords_(std::move(coords)), norm_sq_(0.0) {
    for (double c : coords_) norm_sq_ += c * c;
}

double growth_factor(double gamma, double t) {
    return std::expm1(t * std::log1p(gamma));
}

std::int64_t classical_weighting(double measured_total, double gamma) {
    if (!(gamma > 0.0)) throw InvalidConfig("classical_weighting: gamma must be positive");
    const double raw = (measured_total - 15.0) / gamma;
    const double rounded = std::round(raw);
    if (std::fabs(raw - rounded) > 0.25)
        throw MalformedMeasurement("classical_weighting: excess is not near an integer multiple of gamma");
    if (rounded < 1.0 || rounded > 5.0)
        throw MalformedMeasurement("classical_weighting: decoded stack index outside 1..5");
    return static_cast<std::int64_t>(rounded);
}

std::set<std::int64_t> base2_weighting(double measured_total, std::int64_t n_stacks, double gamma) {
    if (!(gamma > 0.0)) throw InvalidConfig("base2_weighting: gamma must be positive");
    if (n_stacks < 1 || n_stacks > 62) throw InvalidConfig("base2_weighting: n_stacks out of range");
    // 2^(i-1) coins from stack i; all-true total is (2^N - 1) * base weight.
    const double true_total =
        static_cast<double>((std::int64_t{1} << n_stacks) - 1) * CoinSystem::base_weight;
    const double raw = (measured_total - true_total) / gamma;
    const double rounded = std::round(raw);
    if (std::fabs(raw - rounded) > 0.25)
        throw MalformedMeasurement("base2_weighting: excess is not near an integer multiple of gamma");
    const double max_count = static_cast<double>((std::int64_t{1} << n_stacks) - 1);
    if (rounded < 0.0 || rounded > max_count)
        throw MalformedMeasurement("base2_weighting: decoded coin count out of range");
    std::int64_t count = static_cast<std::int64_t>(rounded);
    std::set<std::int64_t> false_stacks;
    for (std::int64_t i = 1; i <= n_stacks; ++i) {
        if (count & (std::int64_t{1} << (i - 1))) false_stacks.insert(i);
    }
    return false_stacks;
}

QuadraticFormValue quadratic_form(const CoinSystem& system, const TestVector& x, std::int64_t t) {
    if (t < 0) throw InvalidConfig("quadratic_form: t must be non-negative");
    QuadraticFormValue r;
    r.value = x.norm_sq();
    const auto j = system.false_stack();
    if (!j || *j > x.dim()) return r;  // false stack absent or outside the observed prefix
    const double xj = x[*j - 1];
    if (xj == 0.0) return r;  // the form never grows in a zeroed coordinate
    const double g = growth_factor(system.gamma(), static_cast<double>(t));
    r.value += g * xj * xj;
    if (std::isinf(r.value)) r.overflowed = true;
    return r;
}

bool clicks(const CoinSystem& system, const TestVector& x, std::int64_t t, double epsilon) {
    if (x.norm_sq() == 0.0) throw NullProbe("clicks: test vector must be non-null");
    if (!(epsilon > 0.0)) throw InvalidConfig("clicks: epsilon must be positive");
    return quadratic_form(system, x, t).value > (1.0 + epsilon) * x.norm_sq();
}

std::int64_t first_click_time_ratio(double norm_sq, double xj, double gamma, double epsilon) {
    check_gamma(gamma);
    if (!(epsilon > 0.0)) throw InvalidConfig("first_click_time: epsilon must be positive");
    if (xj == 0.0) throw NeverClicks("first_click_time: coordinate j is zero, the form never grows");
    const double c = epsilon * norm_sq / (xj * xj);
    // Crossing threshold in continuous time, then adjust to the first
    // integer t where the strict inequality holds in the same log-domain
    // arithmetic the click predicate uses.
    const double tau = std::log1p(c) / std::log1p(gamma);
    if (!(tau < 9.0e18)) throw InvalidConfig("first_click_time: crossing time out of integer range");
    std::int64_t t = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(tau)) - 1);
    while (!(growth_factor(gamma, static_cast<double>(t)) > c)) ++t;
    while (t > 1 && growth_factor(gamma, static_cast<double>(t - 1)) > c) --t;
    return t;
}

std::int64_t first_click_time(const TestVector& x, std::int64_t j, double gamma, double epsilon) {
    if (j < 1 || j > x.dim()) throw IndexError("first_click_time: index outside the vector");
    return first_click_time_ratio(x.norm_sq(), x[j - 1], gamma, epsilon);
}

namespace {

template <typename Real>
Real t_eta_finite_impl(std::int64_t n_stacks, Real epsilon, Real gamma, Real eta) {
    const Real n = static_cast<Real>(n_stacks);
    const Real pi = std::numbers::pi_v<Real>;
    const Real arg = Real(81) * n * n * n * epsilon / (eta * eta * eta * eta * pi * pi) + Real(1);
    return std::log(arg) / std::log1p(gamma);
}

}  // namespace

double t_eta_finite(std::int64_t n_stacks, double epsilon, double gamma, double eta) {
    if (n_stacks < 1) throw InvalidConfig("t_eta_finite: n_stacks must be positive");
    DeviceConfig{epsilon, eta, gamma}.validate();
    return t_eta_finite_impl<double>(n_stacks, epsilon, gamma, eta);
}

long double t_eta_finite_ext(std::int64_t n_stacks, double epsilon, double gamma, double eta) {
    if (n_stacks < 1) throw InvalidConfig("t_eta_finite: n_stacks must be positive");
    DeviceConfig{epsilon, eta, gamma}.validate();
    return t_eta_finite_impl<long double>(n_stacks, static_cast<long double>(epsilon),
                                          static_cast<long double>(gamma),
                                          static_cast<long double>(eta));
}

}  // namespace merchant
