#pragma once

#include <cstdint>

namespace merchant {

// Result of a binomial Monte Carlo experiment.
struct McEstimate {
    std::int64_t trials = 0;
    std::int64_t hits = 0;
    double p_hat = 0.0;
    double std_err = 0.0;
    double ci95_lo = 0.0;  // normal approximation, clamped to [0,1]
    double ci95_hi = 0.0;
    double upper95 = 1.0;  // one-sided exact (Clopper-Pearson) 95% upper bound
    std::uint64_t seed = 0;
};

McEstimate make_mc_estimate(std::int64_t hits, std::int64_t trials, std::uint64_t seed);

// Result of an importance-sampled (reweighted) Monte Carlo experiment.
// The estimate is the plain average of w * indicator; the weights have
// expectation 1 under the sampling measure, so no self-normalization.
struct WeightedEstimate {
    std::int64_t trials = 0;
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    double sum_wf = 0.0;
    double sum_wf2 = 0.0;
    double estimate = 0.0;
    double std_err = 0.0;
    double mean_weight = 0.0;
    double mean_weight_std_err = 0.0;
    double ess = 0.0;  // (sum_w)^2 / sum_w2
    std::uint64_t seed = 0;
};

WeightedEstimate make_weighted_estimate(std::int64_t trials, double sum_w, double sum_w2,
                                        double sum_wf, double sum_wf2, std::uint64_t seed);

// Regularized incomplete beta function I_x(a, b), a,b > 0, x in [0,1].
double beta_inc(double a, double b, double x);

// One-sided exact binomial upper confidence bound: the largest p that is
// still consistent with observing <= hits successes at the given level.
double binomial_upper_bound(std::int64_t hits, std::int64_t trials, double confidence = 0.95);

}  // namespace merchant
