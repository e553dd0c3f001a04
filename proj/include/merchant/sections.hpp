#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace merchant {

// Finite-dimensional section of the l2 indistinguishable set: the section
// H_{2n} has half-dimension n and cone half-width alpha with
// alpha^2 = eps / ((1+gamma)^T - 1). scaled_gate is alpha * sqrt(n).
struct SectionSpec {
    std::int64_t n = 1;
    double alpha = 0.0;
    double t = 0.0;
    double epsilon = 0.0;
    double gamma = 0.0;

    double scaled_gate() const;

    static SectionSpec from_time(std::int64_t n, double epsilon, double gamma, double t);
    // Convenience: pick T so that the cone half-width equals alpha.
    static SectionSpec from_alpha(std::int64_t n, double epsilon, double gamma, double alpha);
};

// Prob of the section:  int_0^{alpha sqrt(n)} dv/(1+v^2/n)^n  divided by
// int_0^infty dv/(1+v^2/n)^n, by adaptive quadrature after the substitution
// v = sqrt(n) tan(theta) (both integrals become finite-interval).
double section_measure(const SectionSpec& spec);

// Denominator int_0^infty dv/(1+v^2/n)^n by quadrature (normative path).
double section_denominator(std::int64_t n);
// Closed form sqrt(n pi) Gamma(n - 1/2) / (2 Gamma(n)), the cross-check.
double section_denominator_closed_form(std::int64_t n);

// Limit of the section measure as n grows: (2/sqrt(pi)) int_0^u exp(-v^2) dv.
double gaussian_limit(double u);

struct SectionRow {
    std::int64_t n = 0;
    double alpha = 0.0;
    double scaled_gate = 0.0;
    double t = 0.0;
    double measure = 0.0;
    double limit = 0.0;      // gaussian_limit(scaled_gate)
    double posterior = 0.0;  // P(no false | non-click)
};

// Fixed experiment duration, growing section dimension: the section measure
// climbs toward 1, which is the failure of the naive l2 construction.
// Posterior uses the section measure itself as Prob(F).
std::vector<SectionRow> discontinuity_demo(double epsilon, double gamma, double t,
                                           const std::vector<std::int64_t>& n_grid,
                                           double prior_no_false = 0.5);

// Coupled schedule T(n) under which the scaled gate shrinks: the section
// measure drops to 0 and the non-click posterior climbs to 1. Prob(F) for
// the posterior is the analytic gate integral
// (1/sqrt(pi)) int_0^{gate} exp(-x^2) dx.
std::vector<SectionRow> coupled_scaling_demo(const std::vector<std::int64_t>& n_grid,
                                             const std::function<double(std::int64_t)>& t_of_n,
                                             double epsilon, double gamma,
                                             double prior_no_false = 0.5);

}  // namespace merchant
