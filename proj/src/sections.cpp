#include "merchant/sections.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "merchant/errors.hpp"
#include "merchant/gauss.hpp"
#include "merchant/quadrature.hpp"

namespace merchant {

namespace {

void check_spec(const SectionSpec& s) {
    if (s.n < 1) throw InvalidConfig("SectionSpec: n must be >= 1");
    if (!(s.alpha >= 0.0)) throw InvalidConfig("SectionSpec: alpha must be >= 0");
}

// After v = sqrt(n) tan(theta) both section integrals reduce to
// sqrt(n) * int cos^{2n-2}(theta) dtheta; the sqrt(n) cancels in the ratio.
double cos_power_integral(std::int64_t n, double theta_hi) {
    const double exponent = 2.0 * static_cast<double>(n) - 2.0;
    auto f = [exponent](double theta) {
        if (theta >= std::numbers::pi / 2) return 0.0;
        // log(cos) = log1p(-sin^2)/2 stays accurate near 0, where the huge
        // exponent would amplify the 1-ulp error of cos to visible noise
        const double s = std::sin(theta);
        return std::exp(exponent * 0.5 * std::log1p(-s * s));
    };
    // The integrand concentrates in a ~1/sqrt(n) neighbourhood of 0; seed
    // panels geometrically from that scale so the peak cannot slip between
    // rule nodes, and use a relative tolerance so the ratio stays accurate
    // for large n.
    std::vector<double> breakpoints;
    double w = 0.5 / std::sqrt(std::max(1.0, exponent));
    while (w < theta_hi) {
        breakpoints.push_back(w);
        w *= 2.0;
    }
    return integrate_or_throw(f, 0.0, theta_hi, 1e-300, 1e-12, 20000, breakpoints);
}

}  // namespace

double SectionSpec::scaled_gate() const { return alpha * std::sqrt(static_cast<double>(n)); }

SectionSpec SectionSpec::from_time(std::int64_t n, double epsilon, double gamma, double t) {
    if (!(epsilon > 0.0)) throw InvalidConfig("SectionSpec: epsilon must be positive");
    const double g = growth_factor(gamma, t);
    if (!(g > 0.0)) throw InvalidConfig("SectionSpec: requires (1+gamma)^T > 1");
    SectionSpec s;
    s.n = n;
    s.epsilon = epsilon;
    s.gamma = gamma;
    s.t = t;
    s.alpha = std::sqrt(epsilon / g);
    check_spec(s);
    return s;
}

SectionSpec SectionSpec::from_alpha(std::int64_t n, double epsilon, double gamma, double alpha) {
    if (!(epsilon > 0.0)) throw InvalidConfig("SectionSpec: epsilon must be positive");
    if (!(alpha > 0.0)) throw InvalidConfig("SectionSpec: alpha must be positive");
    SectionSpec s;
    s.n = n;
    s.epsilon = epsilon;
    s.gamma = gamma;
    s.alpha = alpha;
    s.t = std::log1p(epsilon / (alpha * alpha)) / std::log1p(gamma);
    check_spec(s);
    return s;
}

double section_measure(const SectionSpec& spec) {
    check_spec(spec);
    if (spec.alpha == 0.0) return 0.0;
    const double theta_gate = std::atan(spec.alpha);
    const double num = cos_power_integral(spec.n, theta_gate);
    const double den = cos_power_integral(spec.n, std::numbers::pi / 2);
    const double ratio = num / den;
    if (!(ratio >= 0.0) || ratio > 1.0 + 1e-12)
        throw NumericalFailure("section_measure: ratio escaped [0,1]");
    return std::min(1.0, ratio);
}

double section_denominator(std::int64_t n) {
    if (n < 1) throw InvalidConfig("section_denominator: n must be >= 1");
    return std::sqrt(static_cast<double>(n)) * cos_power_integral(n, std::numbers::pi / 2);
}

double section_denominator_closed_form(std::int64_t n) {
    if (n < 1) throw InvalidConfig("section_denominator_closed_form: n must be >= 1");
    const double nd = static_cast<double>(n);
    return std::exp(0.5 * std::log(nd * std::numbers::pi) + std::lgamma(nd - 0.5) -
                    std::numbers::ln2 - std::lgamma(nd));
}

double gaussian_limit(double u) {
    if (!(u >= 0.0)) throw InvalidConfig("gaussian_limit: u must be >= 0");
    return std::erf(u);
}

std::vector<SectionRow> discontinuity_demo(double epsilon, double gamma, double t,
                                           const std::vector<std::int64_t>& n_grid,
                                           double prior_no_false) {
    std::vector<SectionRow> rows;
    rows.reserve(n_grid.size());
    for (std::int64_t n : n_grid) {
        const SectionSpec spec = SectionSpec::from_time(n, epsilon, gamma, t);
        SectionRow row;
        row.n = n;
        row.alpha = spec.alpha;
        row.scaled_gate = spec.scaled_gate();
        row.t = t;
        row.measure = section_measure(spec);
        row.limit = gaussian_limit(row.scaled_gate);
        row.posterior = bayes_posterior_finite(prior_no_false, row.measure, 2 * n).posterior;
        rows.push_back(row);
    }
    return rows;
}

std::vector<SectionRow> coupled_scaling_demo(const std::vector<std::int64_t>& n_grid,
                                             const std::function<double(std::int64_t)>& t_of_n,
                                             double epsilon, double gamma,
                                             double prior_no_false) {
    if (n_grid.empty()) throw InvalidConfig("coupled_scaling_demo: empty grid");
    // The schedule must shrink the scaled gate along the grid.
    double prev_gate = std::numeric_limits<double>::infinity();
    std::vector<SectionRow> rows;
    rows.reserve(n_grid.size());
    for (std::int64_t n : n_grid) {
        const SectionSpec spec = SectionSpec::from_time(n, epsilon, gamma, t_of_n(n));
        const double gate = spec.scaled_gate();
        if (rows.size() >= 1 && !(gate < prev_gate))
            throw InvalidSchedule("coupled_scaling_demo: scaled gate must decrease along the grid");
        prev_gate = gate;
        SectionRow row;
        row.n = n;
        row.alpha = spec.alpha;
        row.scaled_gate = gate;
        row.t = spec.t;
        row.measure = section_measure(spec);
        row.limit = gaussian_limit(gate);
        // half of erf: (1/sqrt(pi)) int_0^gate exp(-x^2) dx
        const double prob_f = 0.5 * std::erf(gate);
        row.posterior = bayes_posterior_finite(prior_no_false, prob_f, 2 * n).posterior;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace merchant
