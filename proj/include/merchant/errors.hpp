#pragma once

#include <stdexcept>
#include <string>

namespace merchant {

// Base class for all domain errors thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A weighing result that cannot be decoded back to stack indices.
struct MalformedMeasurement : Error {
    using Error::Error;
};

// Probing the device with the null vector.
struct NullProbe : Error {
    using Error::Error;
};

// first_click_time asked for a coordinate that never drives a click.
struct NeverClicks : Error {
    using Error::Error;
};

// Parameter outside the documented domain (epsilon, eta, gamma, ...).
struct InvalidConfig : Error {
    using Error::Error;
};

// Bound formulas that divide by (1+gamma)^t - 1 reject t = 0.
struct DegenerateTime : Error {
    using Error::Error;
};

// Monte Carlo experiment whose answer is known identically (e.g. the
// indistinguishable set of an all-true system has probability 1).
struct DegenerateExperiment : Error {
    using Error::Error;
};

// Quadrature failed to reach the requested tolerance.
struct NumericalFailure : Error {
    using Error::Error;
};

// Green function evaluated with t <= s.
struct InvalidTimes : Error {
    using Error::Error;
};

// Coordinate index outside the trajectory.
struct IndexError : Error {
    using Error::Error;
};

// The Wiener-measure bound requires (1+gamma)^T > 1 + epsilon.
struct BoundNotApplicable : Error {
    using Error::Error;
};

// Importance-sampling weights too degenerate to trust the estimate.
struct UnstableWeights : Error {
    using Error::Error;
};

// A coupled (n, T) schedule whose scaled gate does not shrink.
struct InvalidSchedule : Error {
    using Error::Error;
};

// Device horizon exceeds the program's simulation step budget.
struct BudgetExceeded : Error {
    using Error::Error;
};

}  // namespace merchant
