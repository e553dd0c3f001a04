#include "merchant/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "merchant/errors.hpp"
#include "merchant/parallel.hpp"

namespace merchant {

GaussianSampler::GaussianSampler(std::int64_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension < 1) throw InvalidConfig("GaussianSampler: dimension must be >= 1");
}

TestVector GaussianSampler::sample_trial(std::int64_t k) const {
    RngStream stream(seed_, static_cast<std::uint64_t>(k));
    const double scale = std::numbers::sqrt2 / 2.0;  // variance 1/2
    std::vector<double> coords(static_cast<std::size_t>(dimension_));
    for (auto& c : coords) c = stream.next_normal() * scale;
    return TestVector(std::move(coords));
}

TestVector GaussianSampler::sample() { return sample_trial(trial_counter_++); }

bool in_indistinguishable_set(const CoinSystem& system, const TestVector& x, double epsilon,
                              std::int64_t t) {
    if (x.norm_sq() == 0.0) return true;  // the null probe lies at any time
    return !clicks(system, x, t, epsilon);
}

namespace {

// log((1+gamma)^t - 1); stays finite where growth_factor overflows
double log_growth(double gamma, double t) {
    const double x = t * std::log1p(gamma);
    if (x > 36.0) return x + std::log1p(-std::exp(-x));
    return std::log(std::expm1(x));
}

}  // namespace

double bound_small_norm(std::int64_t n, double epsilon, double gamma, double t, double m) {
    (void)n;
    if (!(t > 0.0)) throw DegenerateTime("bound_small_norm: t must be positive");
    if (!(m > 0.0)) throw InvalidConfig("bound_small_norm: M must be positive");
    if (!(epsilon > 0.0)) throw InvalidConfig("bound_small_norm: epsilon must be positive");
    return std::exp(std::log(2.0 * m) + 0.5 * std::log(epsilon) -
                    0.5 * std::log(std::numbers::pi) -
                    0.5 * log_growth(gamma, t));
}

double bound_large_norm(std::int64_t n, double m) {
    if (!(m > 0.0)) throw InvalidConfig("bound_large_norm: M must be positive");
    const double nd = static_cast<double>(n);
    return nd * std::sqrt(nd) / (m * std::sqrt(std::numbers::pi)) * std::exp(-m * m / nd);
}

BoundBreakdown bound_total(std::int64_t n, double epsilon, double gamma, double t) {
    if (!(t > 0.0)) throw DegenerateTime("bound_total: t must be positive");
    if (!(epsilon > 0.0)) throw InvalidConfig("bound_total: epsilon must be positive");
    const double nd = static_cast<double>(n);
    const double lg = log_growth(gamma, t);
    BoundBreakdown b;
    // everything in log domain: the growth term overflows long before the
    // bound itself leaves the double range
    const double log_m_star = 0.75 * std::log(nd) + 0.25 * (lg - std::log(epsilon));
    b.m_star = std::exp(log_m_star);
    // shared factor A = N^{3/4} eps^{1/4} / (sqrt(pi) g^{1/4});
    // small = 2A, large = A exp(-m_star^2/N), simplified = 3A
    const double log_a = 0.75 * std::log(nd) + 0.25 * std::log(epsilon) -
                         0.5 * std::log(std::numbers::pi) - 0.25 * lg;
    const double a = std::exp(log_a);
    b.small_norm_term = 2.0 * a;
    b.large_norm_term = a * std::exp(-std::exp(2.0 * log_m_star - std::log(nd)));
    b.total = b.small_norm_term + b.large_norm_term;
    b.simplified = 3.0 * a;
    return b;
}

double clamp_probability(double p) { return std::min(1.0, std::max(0.0, p)); }

McEstimate mc_indistinguishable_probability(const CoinSystem& system, double epsilon,
                                            std::int64_t t, std::int64_t trials,
                                            std::uint64_t seed, int threads) {
    if (!system.false_stack())
        throw DegenerateExperiment(
            "mc_indistinguishable_probability: all-true system, probability is identically 1");
    if (trials < 1) throw InvalidConfig("mc_indistinguishable_probability: trials must be >= 1");
    if (system.countable())
        throw InvalidConfig("mc_indistinguishable_probability: finite-dimensional device only");
    const std::int64_t n = *system.n_stacks();
    GaussianSampler sampler(n, seed);

    struct Partial {
        std::int64_t hits = 0;
        void merge(const Partial& o) { hits += o.hits; }
    };
    Partial total = run_batches<Partial>(
        trials,
        [&](std::int64_t first, std::int64_t last) {
            Partial p;
            for (std::int64_t k = first; k < last; ++k) {
                const TestVector x = sampler.sample_trial(k);
                if (in_indistinguishable_set(system, x, epsilon, t)) ++p.hits;
            }
            return p;
        },
        threads);
    return make_mc_estimate(total.hits, trials, seed);
}

BayesPosterior bayes_posterior_finite(double prior_no_false, double prob_f,
                                      std::int64_t n_stacks) {
    if (!(prior_no_false > 0.0 && prior_no_false < 1.0))
        throw InvalidConfig("bayes_posterior_finite: prior must lie in (0,1)");
    if (!(prob_f >= 0.0 && prob_f <= 1.0))
        throw InvalidConfig("bayes_posterior_finite: prob_F must lie in [0,1]");
    BayesPosterior r;
    r.posterior = prior_no_false / (prior_no_false + (1.0 - prior_no_false) * prob_f);
    r.lower_bound = 1.0 - static_cast<double>(n_stacks) * prob_f;
    return r;
}

double cone_probability_2d(double epsilon, double gamma, std::int64_t t) {
    if (t == 0) throw DegenerateTime("cone_probability_2d: t must be >= 1");
    const double alpha_sq = epsilon / growth_factor(gamma, static_cast<double>(t));
    if (alpha_sq >= 1.0) return 1.0;
    const double c = std::sqrt(alpha_sq) / std::sqrt(1.0 - alpha_sq);
    return 2.0 / std::numbers::pi * std::atan(c);
}

}  // namespace merchant
