#pragma once

#include <cstdint>

#include "merchant/coins.hpp"
#include "merchant/rng.hpp"
#include "merchant/stats.hpp"

namespace merchant {

// Draws probe vectors with i.i.d. Normal(0, 1/2) coordinates. Trial k of a
// given seed always produces the same vector, so batches can be replayed or
// spread over workers freely.
class GaussianSampler {
public:
    GaussianSampler(std::int64_t dimension, std::uint64_t seed);

    TestVector sample();                        // advances the trial counter
    TestVector sample_trial(std::int64_t k) const;  // stateless access to trial k

    std::int64_t dimension() const { return dimension_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t trial_counter() const { return trial_counter_; }

private:
    std::int64_t dimension_;
    std::uint64_t seed_;
    std::int64_t trial_counter_ = 0;
};

// Terms of the probability bound on the indistinguishable set of a false
// system, split the way the estimate is derived: a small-norm piece, a
// large-norm Gaussian tail piece, their sum, and the closed-form upper
// bound obtained at the optimal split radius m_star.
struct BoundBreakdown {
    double m_star = 0.0;
    double small_norm_term = 0.0;
    double large_norm_term = 0.0;
    double total = 0.0;       // small + large, evaluated at m_star
    double simplified = 0.0;  // 3 N^{3/4} eps^{1/4} / (sqrt(pi) ((1+g)^t - 1)^{1/4}), unclamped
};

// Membership in the indistinguishable set F_{eps,t}: the form stayed at or
// below the click threshold. Null vectors are members by convention.
bool in_indistinguishable_set(const CoinSystem& system, const TestVector& x, double epsilon,
                              std::int64_t t);

// 2 M sqrt(eps) / (sqrt(pi) sqrt((1+gamma)^t - 1)); t is real so the bound
// can be evaluated at non-integer stopping times like T_eta
double bound_small_norm(std::int64_t n, double epsilon, double gamma, double t, double m);

// N sqrt(N) / (M sqrt(pi)) * exp(-M^2/N)
double bound_large_norm(std::int64_t n, double m);

BoundBreakdown bound_total(std::int64_t n, double epsilon, double gamma, double t);

// Probability estimates or bounds above 1 are reported as 1.
double clamp_probability(double p);

// Monte Carlo estimate of Prob(F_{eps,t}) for a system with a false stack.
// threads = 0 picks the default worker count; the result does not depend on it.
McEstimate mc_indistinguishable_probability(const CoinSystem& system, double epsilon,
                                            std::int64_t t, std::int64_t trials,
                                            std::uint64_t seed, int threads = 0);

struct BayesPosterior {
    double posterior = 0.0;    // P(no false | non-click)
    double lower_bound = 0.0;  // 1 - N * prob_F, valid for the uniform prior
};

// Bayes update after a silent device: prior / (prior + (1-prior) * prob_F).
BayesPosterior bayes_posterior_finite(double prior_no_false, double prob_f,
                                      std::int64_t n_stacks);

// Exact cone probability in dimension 2: the indistinguishable set of a
// false two-stack system is the double cone |x_j| <= c |x_i| with
// c = alpha / sqrt(1 - alpha^2), alpha^2 = eps / ((1+gamma)^t - 1);
// rotation invariance gives probability (2/pi) atan(c). Returns 1 when
// alpha >= 1 (the cone is the whole plane).
double cone_probability_2d(double epsilon, double gamma, std::int64_t t);

}  // namespace merchant
