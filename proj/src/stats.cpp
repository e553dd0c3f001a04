#include "merchant/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "merchant/errors.hpp"

namespace merchant {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Continued fraction for the incomplete beta function (Lentz's method).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw NumericalFailure("beta_inc: continued fraction did not converge");
}

}  // namespace

double beta_inc(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidConfig("beta_inc: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double binomial_upper_bound(std::int64_t hits, std::int64_t trials, double confidence) {
    if (trials <= 0) throw InvalidConfig("binomial_upper_bound: trials must be positive");
    if (hits < 0 || hits > trials) throw InvalidConfig("binomial_upper_bound: hits out of range");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw InvalidConfig("binomial_upper_bound: confidence must be in (0,1)");
    if (hits == trials) return 1.0;

    // Upper limit solves I_p(hits+1, trials-hits) = confidence; I_p is
    // increasing in p, so bisect.
    const double a = static_cast<double>(hits) + 1.0;
    const double b = static_cast<double>(trials - hits);
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (beta_inc(a, b, mid) < confidence) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

McEstimate make_mc_estimate(std::int64_t hits, std::int64_t trials, std::uint64_t seed) {
    if (trials <= 0) throw InvalidConfig("make_mc_estimate: trials must be positive");
    if (hits < 0 || hits > trials) throw InvalidConfig("make_mc_estimate: hits out of range");
    McEstimate e;
    e.trials = trials;
    e.hits = hits;
    e.seed = seed;
    e.p_hat = static_cast<double>(hits) / static_cast<double>(trials);
    e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(trials));
    e.ci95_lo = clamp01(e.p_hat - 1.959963984540054 * e.std_err);
    e.ci95_hi = clamp01(e.p_hat + 1.959963984540054 * e.std_err);
    e.upper95 = binomial_upper_bound(hits, trials, 0.95);
    return e;
}

WeightedEstimate make_weighted_estimate(std::int64_t trials, double sum_w, double sum_w2,
                                        double sum_wf, double sum_wf2, std::uint64_t seed) {
    if (trials <= 0) throw InvalidConfig("make_weighted_estimate: trials must be positive");
    WeightedEstimate e;
    e.trials = trials;
    e.sum_w = sum_w;
    e.sum_w2 = sum_w2;
    e.sum_wf = sum_wf;
    e.sum_wf2 = sum_wf2;
    e.seed = seed;
    const double n = static_cast<double>(trials);
    e.estimate = sum_wf / n;
    e.mean_weight = sum_w / n;
    const double var_wf = std::max(0.0, sum_wf2 / n - e.estimate * e.estimate);
    e.std_err = std::sqrt(var_wf / n);
    const double var_w = std::max(0.0, sum_w2 / n - e.mean_weight * e.mean_weight);
    e.mean_weight_std_err = std::sqrt(var_w / n);
    e.ess = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
    return e;
}

}  // namespace merchant
