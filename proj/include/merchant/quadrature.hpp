#pragma once

#include <functional>
#include <vector>

namespace merchant {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;  // estimated
    int subdivisions = 0;
    bool converged = false;
};

// Globally adaptive Gauss-Kronrod 7-15 integration of f over [a, b].
// Splits the interval with the worst error estimate until the total falls
// below max(abs_tol, rel_tol * |value|) or the subdivision cap is reached.
// breakpoints pre-splits the interval; callers that know where the mass
// concentrates should seed panels there, or a spike can hide between the
// nodes of the first rule evaluation.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-12, double rel_tol = 1e-12, int max_subdiv = 5000,
                     const std::vector<double>& breakpoints = {});

// Same, but throws NumericalFailure when the tolerance is not reached.
double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          double abs_tol = 1e-12, double rel_tol = 1e-12, int max_subdiv = 5000,
                          const std::vector<double>& breakpoints = {});

}  // namespace merchant
