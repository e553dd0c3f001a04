#include "merchant/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "merchant/coins.hpp"
#include "merchant/errors.hpp"
#include "merchant/parallel.hpp"
#include "merchant/quadrature.hpp"

namespace merchant {

TimeScale::TimeScale(Kind kind, std::string name, std::vector<double> deltas)
    : kind_(kind), name_(std::move(name)), deltas_(std::move(deltas)) {
    if (kind_ == Kind::Custom) {
        if (deltas_.empty()) throw InvalidConfig("TimeScale: custom delta list is empty");
        prefix_time_.reserve(deltas_.size());
        prefix_log_.reserve(deltas_.size());
        double t = 0.0, lg = 0.0;
        for (double d : deltas_) {
            if (!(d > 0.0 && d < 1.0))
                throw InvalidConfig("TimeScale: custom deltas must lie in (0,1)");
            t += d;
            lg += std::log(d);
            prefix_time_.push_back(t);
            prefix_log_.push_back(lg);
        }
    }
}

TimeScale TimeScale::equidistant() { return TimeScale(Kind::Equidistant, "equidistant", {}); }
TimeScale TimeScale::exp2() { return TimeScale(Kind::Exp2, "exp2", {}); }
TimeScale TimeScale::custom(std::vector<double> deltas) {
    return TimeScale(Kind::Custom, "custom", std::move(deltas));
}

TimeScale TimeScale::by_name(const std::string& name) {
    if (name == "equidistant") return equidistant();
    if (name == "exp2") return exp2();
    throw InvalidConfig("TimeScale: unknown scale name '" + name + "'");
}

double TimeScale::log_delta(std::int64_t m) const {
    if (m < 1) throw IndexError("TimeScale: step index must be >= 1");
    switch (kind_) {
        case Kind::Equidistant:
            return 0.0;
        case Kind::Exp2:
            // delta_m = exp(-2^-m); beyond m ~ 1074 the exponent underflows
            return m > 1074 ? 0.0 : -std::ldexp(1.0, static_cast<int>(-m));
        case Kind::Custom:
            return m <= static_cast<std::int64_t>(deltas_.size())
                       ? std::log(deltas_[static_cast<std::size_t>(m - 1)])
                       : 0.0;
    }
    return 0.0;
}

double TimeScale::delta(std::int64_t m) const {
    if (kind_ == Kind::Custom)
        return m <= static_cast<std::int64_t>(deltas_.size())
                   ? deltas_[static_cast<std::size_t>(m - 1)]
                   : 1.0;
    return std::exp(log_delta(m));
}

double TimeScale::weight(std::int64_t m) const {
    // (1 - delta)/delta = exp(-log delta) - 1, stable for delta near 1
    return std::expm1(-log_delta(m));
}

double TimeScale::time(std::int64_t l) const {
    if (l < 0) throw IndexError("TimeScale: time index must be >= 0");
    if (l == 0) return 0.0;
    switch (kind_) {
        case Kind::Equidistant:
            return static_cast<double>(l);
        case Kind::Exp2: {
            double t = 0.0;
            for (std::int64_t m = 1; m <= l; ++m) t += delta(m);
            return t;
        }
        case Kind::Custom: {
            const auto sz = static_cast<std::int64_t>(deltas_.size());
            if (l <= sz) return prefix_time_[static_cast<std::size_t>(l - 1)];
            return prefix_time_.back() + static_cast<double>(l - sz);
        }
    }
    return 0.0;
}

double TimeScale::log_product_prefix(std::int64_t n) const {
    if (n < 0) throw IndexError("TimeScale: prefix length must be >= 0");
    switch (kind_) {
        case Kind::Equidistant:
            return 0.0;
        case Kind::Exp2:
            // sum_{m<=n} -2^-m = -(1 - 2^-n)
            return n > 1074 ? -1.0 : -(1.0 - std::ldexp(1.0, static_cast<int>(-n)));
        case Kind::Custom: {
            if (n == 0) return 0.0;
            const auto sz = static_cast<std::int64_t>(deltas_.size());
            return prefix_log_[static_cast<std::size_t>(std::min(n, sz) - 1)];
        }
    }
    return 0.0;
}

double TimeScale::log_product_total() const {
    switch (kind_) {
        case Kind::Equidistant:
            return 0.0;
        case Kind::Exp2:
            return -1.0;  // sum_{m>=1} -2^-m exactly
        case Kind::Custom:
            return prefix_log_.back();
    }
    return 0.0;
}

void GateSpec::validate() const {
    if (times.empty() || times.size() != gates.size())
        throw InvalidConfig("GateSpec: times and gates must be non-empty and equal length");
    double prev = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > prev)) throw InvalidConfig("GateSpec: times must be strictly increasing");
        prev = times[i];
        if (!(gates[i].lo < gates[i].hi)) throw InvalidConfig("GateSpec: empty gate interval");
    }
}

double green(double x, double t, double y, double s) {
    if (!(t > s)) throw InvalidTimes("green: requires t > s");
    const double dt = t - s;
    const double d = x - y;
    return std::exp(-d * d / dt) / std::sqrt(std::numbers::pi * dt);
}

Trajectory sample_trajectory(const TimeScale& scale, std::int64_t length, RngStream& stream) {
    if (length < 1) throw InvalidConfig("sample_trajectory: length must be >= 1");
    Trajectory traj;
    traj.times.resize(static_cast<std::size_t>(length) + 1);
    traj.positions.resize(static_cast<std::size_t>(length) + 1);
    traj.times[0] = 0.0;
    traj.positions[0] = 0.0;
    double t = 0.0, x = 0.0;
    for (std::int64_t m = 1; m <= length; ++m) {
        const double d = scale.delta(m);
        t += d;
        x += stream.next_normal() * std::sqrt(0.5 * d);  // kernel variance delta/2
        traj.times[static_cast<std::size_t>(m)] = t;
        traj.positions[static_cast<std::size_t>(m)] = x;
    }
    return traj;
}

Trajectory sample_trajectory(const TimeScale& scale, std::int64_t length, std::uint64_t seed,
                             std::uint64_t trial_index) {
    RngStream stream(seed, trial_index);
    return sample_trajectory(scale, length, stream);
}

namespace {

// Gate integrals clamp infinite endpoints at a width where the remaining
// kernel mass is below 1e-60.
constexpr double kRangeSigmas = 12.0;

std::pair<double, double> clamp_gate(const Gate& g, double t) {
    const double reach = kRangeSigmas * std::sqrt(t);
    const double lo = std::isinf(g.lo) ? -reach : g.lo;
    const double hi = std::isinf(g.hi) ? reach : g.hi;
    return {lo, hi};
}

// int over the gates of prod G(x_l, t_l | x_{l-1}, t_{l-1}); recursion over
// the levels with the innermost gate integral in closed form (erf).
double gated_integral(const GateSpec& spec, std::size_t level, double x_prev, double t_prev,
                      double abs_tol) {
    const std::size_t n = spec.times.size();
    const double t_here = spec.times[level];
    if (level + 1 == n) {
        const auto [lo, hi] = clamp_gate(spec.gates[level], t_here);
        const double s = std::sqrt(t_here - t_prev);
        return 0.5 * (std::erf((hi - x_prev) / s) - std::erf((lo - x_prev) / s));
    }
    const auto [lo, hi] = clamp_gate(spec.gates[level], t_here);
    if (!(lo < hi)) return 0.0;
    auto f = [&](double x) {
        return green(x, t_here, x_prev, t_prev) *
               gated_integral(spec, level + 1, x, t_here, abs_tol * 0.1);
    };
    return integrate_or_throw(f, lo, hi, abs_tol, 1e-10, 4000);
}

}  // namespace

double cylinder_measure(const GateSpec& spec, const TimeScale& scale) {
    spec.validate();
    (void)scale;  // gate times are absolute; the scale fixes no grid here
    if (spec.times.size() > 3)
        throw InvalidConfig("cylinder_measure: quadrature path handles at most 3 gates");
    const double numerator = gated_integral(spec, 0, 0.0, 0.0, 1e-11);
    // Ungated path: same iterated integral with full-line gates; kernel
    // normalization must collapse it to 1.
    GateSpec open = spec;
    for (auto& g : open.gates) {
        g.lo = -std::numeric_limits<double>::infinity();
        g.hi = std::numeric_limits<double>::infinity();
    }
    const double denominator = gated_integral(open, 0, 0.0, 0.0, 1e-11);
    if (std::fabs(denominator - 1.0) > 1e-6)
        throw NumericalFailure("cylinder_measure: ungated integral failed to normalize to 1");
    return numerator / denominator;
}

double sobolev_norm_sq(const Trajectory& traj) {
    double s = 0.0;
    for (std::size_t m = 1; m < traj.positions.size(); ++m) {
        const double d = traj.positions[m] - traj.positions[m - 1];
        s += d * d;
    }
    return s;
}

WeightedSobolev weighted_sobolev_norm_sq(const Trajectory& traj, const TimeScale& scale) {
    WeightedSobolev out;
    if (!scale.perturbed()) {
        out.zero_weights = true;  // every (1-delta)/delta vanishes
        return out;
    }
    for (std::size_t m = 1; m < traj.positions.size(); ++m) {
        const double d = traj.positions[m] - traj.positions[m - 1];
        out.value += scale.weight(static_cast<std::int64_t>(m)) * d * d;
    }
    return out;
}

bool is_quasi_loop(const Trajectory& traj, double c) {
    if (!(c > 0.0)) throw InvalidConfig("is_quasi_loop: C must be positive");
    for (std::size_t m = 1; m < traj.positions.size(); ++m) {
        const double x = traj.positions[m];
        if (!(x * x / traj.times[m] < c)) return false;
    }
    return true;
}

double radon_nikodym_weight(const Trajectory& traj, const TimeScale& scale) {
    if (!scale.perturbed())
        throw InvalidConfig("radon_nikodym_weight: requires a perturbed scale");
    const WeightedSobolev w = weighted_sobolev_norm_sq(traj, scale);
    const double log_prod = scale.log_product_prefix(traj.length());
    return std::exp(-w.value - 0.5 * log_prod);
}

bool in_indistinguishable_brownian(const Trajectory& traj, std::int64_t j, double gamma,
                                   double epsilon, double t_exponent, const TimeScale& scale) {
    if (j < 1 || j > traj.length())
        throw IndexError("in_indistinguishable_brownian: index outside the trajectory");
    if (!(epsilon > 0.0)) throw InvalidConfig("in_indistinguishable_brownian: epsilon must be positive");
    const double g = growth_factor(gamma, t_exponent);
    if (!(g > 0.0)) throw InvalidConfig("in_indistinguishable_brownian: requires (1+gamma)^T > 1");
    const double xj = traj.positions[static_cast<std::size_t>(j)];
    const WeightedSobolev norm1 = weighted_sobolev_norm_sq(traj, scale);
    // a zeroed coordinate never leaves the cone, whatever the growth
    const double lhs = xj == 0.0 ? 0.0 : g * xj * xj;
    return lhs < epsilon * norm1.value;
}

namespace {

struct McPartial {
    std::int64_t hits = 0;
    void merge(const McPartial& o) { hits += o.hits; }
};

struct WeightedPartial {
    double sum_w = 0.0, sum_w2 = 0.0, sum_wf = 0.0, sum_wf2 = 0.0;
    void merge(const WeightedPartial& o) {
        sum_w += o.sum_w;
        sum_w2 += o.sum_w2;
        sum_wf += o.sum_wf;
        sum_wf2 += o.sum_wf2;
    }
};

bool member_at_mode(const Trajectory& traj, std::int64_t j, double gamma, double epsilon,
                    double t_exponent, const TimeScale& scale, FalseIndexMode mode) {
    if (mode == FalseIndexMode::kInjected)
        return in_indistinguishable_brownian(traj, j, gamma, epsilon, t_exponent, scale);
    // union over indices: the smallest |x_k| decides, so test each
    const double g = growth_factor(gamma, t_exponent);
    const double rhs = epsilon * weighted_sobolev_norm_sq(traj, scale).value;
    for (std::int64_t k = 1; k <= traj.length(); ++k) {
        const double xk = traj.positions[static_cast<std::size_t>(k)];
        const double lhs = xk == 0.0 ? 0.0 : g * xk * xk;
        if (lhs < rhs) return true;
    }
    return false;
}

}  // namespace

WienerMcResult mc_wiener_indistinguishable(std::int64_t j, double gamma, double epsilon,
                                           double t_exponent, const TimeScale& scale,
                                           std::int64_t length, std::int64_t trials,
                                           std::uint64_t seed, FalseIndexMode mode,
                                           double quasi_loop_c, int threads) {
    if (!scale.perturbed())
        throw InvalidConfig("mc_wiener_indistinguishable: requires a perturbed scale");
    if (j < 1 || j > length)
        throw IndexError("mc_wiener_indistinguishable: index outside the horizon");
    if (trials < 1) throw InvalidConfig("mc_wiener_indistinguishable: trials must be >= 1");
    const TimeScale equi = TimeScale::equidistant();

    // Route 1: sample under the perturbed measure directly.
    McPartial direct = run_batches<McPartial>(
        trials,
        [&](std::int64_t first, std::int64_t last) {
            McPartial p;
            for (std::int64_t k = first; k < last; ++k) {
                RngStream stream(seed, static_cast<std::uint64_t>(k));
                const Trajectory traj = sample_trajectory(scale, length, stream);
                if (!is_quasi_loop(traj, quasi_loop_c)) continue;
                if (member_at_mode(traj, j, gamma, epsilon, t_exponent, scale, mode)) ++p.hits;
            }
            return p;
        },
        threads);

    // Route 2: sample under the equidistant measure, reweight by the
    // density of the perturbed measure. Distinct stream index space.
    const std::uint64_t reweight_salt = 0x52657765696768ULL;  // differentiates the two routes
    WeightedPartial rw = run_batches<WeightedPartial>(
        trials,
        [&](std::int64_t first, std::int64_t last) {
            WeightedPartial p;
            for (std::int64_t k = first; k < last; ++k) {
                RngStream stream(seed ^ reweight_salt, static_cast<std::uint64_t>(k));
                const Trajectory traj = sample_trajectory(equi, length, stream);
                const double w = radon_nikodym_weight(traj, scale);
                const bool in_class = is_quasi_loop(traj, quasi_loop_c);
                const bool f = in_class &&
                               member_at_mode(traj, j, gamma, epsilon, t_exponent, scale, mode);
                const double wf = f ? w : 0.0;
                p.sum_w += w;
                p.sum_w2 += w * w;
                p.sum_wf += wf;
                p.sum_wf2 += wf * wf;
            }
            return p;
        },
        threads);

    WienerMcResult out;
    out.direct = make_mc_estimate(direct.hits, trials, seed);
    out.reweighted =
        make_weighted_estimate(trials, rw.sum_w, rw.sum_w2, rw.sum_wf, rw.sum_wf2, seed);
    if (out.reweighted.ess < 100.0)
        throw UnstableWeights("mc_wiener_indistinguishable: effective sample size below 100");
    out.joint_diff = std::fabs(out.direct.p_hat - out.reweighted.estimate);
    out.joint_std_err = std::sqrt(out.direct.std_err * out.direct.std_err +
                                  out.reweighted.std_err * out.reweighted.std_err);
    out.agree_3se = out.joint_diff <= 3.0 * out.joint_std_err;
    try {
        const WienerBound b = wiener_bound(epsilon, gamma, t_exponent, scale);
        out.bound_raw = b.raw;
        out.bound_clamped = b.clamped;
    } catch (const BoundNotApplicable&) {
        // below the applicability threshold the raw estimates still stand
    }
    return out;
}

McEstimate mc_quasi_loop_fraction(const TimeScale& scale, std::int64_t length, double c,
                                  std::int64_t trials, std::uint64_t seed, int threads) {
    if (trials < 1) throw InvalidConfig("mc_quasi_loop_fraction: trials must be >= 1");
    McPartial total = run_batches<McPartial>(
        trials,
        [&](std::int64_t first, std::int64_t last) {
            McPartial p;
            for (std::int64_t k = first; k < last; ++k) {
                RngStream stream(seed, static_cast<std::uint64_t>(k));
                const Trajectory traj = sample_trajectory(scale, length, stream);
                if (is_quasi_loop(traj, c)) ++p.hits;
            }
            return p;
        },
        threads);
    return make_mc_estimate(total.hits, trials, seed);
}

ReflectionTail reflection_tail_estimate(const TimeScale& scale, std::int64_t length, double a,
                                        std::int64_t trials, std::uint64_t seed, int threads) {
    if (!(a > 0.0)) throw InvalidConfig("reflection_tail_estimate: a must be positive");
    if (trials < 1) throw InvalidConfig("reflection_tail_estimate: trials must be >= 1");
    struct Partial {
        std::int64_t max_hits = 0;
        std::int64_t end_hits = 0;
        void merge(const Partial& o) {
            max_hits += o.max_hits;
            end_hits += o.end_hits;
        }
    };
    Partial total = run_batches<Partial>(
        trials,
        [&](std::int64_t first, std::int64_t last) {
            Partial p;
            for (std::int64_t k = first; k < last; ++k) {
                RngStream stream(seed, static_cast<std::uint64_t>(k));
                const Trajectory traj = sample_trajectory(scale, length, stream);
                double max_abs = 0.0;
                for (std::size_t m = 1; m < traj.positions.size(); ++m)
                    max_abs = std::max(max_abs, std::fabs(traj.positions[m]));
                if (max_abs > a) ++p.max_hits;
                if (std::fabs(traj.positions.back()) > a) ++p.end_hits;
            }
            return p;
        },
        threads);
    ReflectionTail out;
    out.max_exceeds = make_mc_estimate(total.max_hits, trials, seed);
    out.end_exceeds = make_mc_estimate(total.end_hits, trials, seed);
    return out;
}

WienerBound wiener_bound(double epsilon, double gamma, double t_exponent, const TimeScale& scale) {
    if (!(epsilon > 0.0)) throw InvalidConfig("wiener_bound: epsilon must be positive");
    const double g = growth_factor(gamma, t_exponent);
    if (!(g > epsilon))
        throw BoundNotApplicable("wiener_bound: requires (1+gamma)^T > 1 + epsilon");
    const double log_prod = scale.log_product_total();
    WienerBound b;
    b.raw = std::sqrt(epsilon) * std::exp(-0.5 * (std::log(g - epsilon) + log_prod));
    b.clamped = std::min(1.0, b.raw);
    return b;
}

double t_eta_brownian(double epsilon, double gamma, double eta, const TimeScale& scale) {
    DeviceConfig{epsilon, eta, gamma}.validate();
    const double prod = std::exp(scale.log_product_total());
    const double arg = epsilon / (eta * eta * prod) + 1.0 + epsilon;
    return std::log(arg) / std::log1p(gamma);
}

BrownianPosterior bayes_posterior_brownian(double prior_no_false, double epsilon, double gamma,
                                           double t_exponent, const TimeScale& scale) {
    if (!(prior_no_false > 0.0 && prior_no_false < 1.0))
        throw InvalidConfig("bayes_posterior_brownian: prior must lie in (0,1)");
    const WienerBound b = wiener_bound(epsilon, gamma, t_exponent, scale);
    BrownianPosterior p;
    p.lower_bound = 1.0 - (1.0 - prior_no_false) / prior_no_false * b.raw;
    p.point = prior_no_false / (prior_no_false + (1.0 - prior_no_false) * b.clamped);
    return p;
}

}  // namespace merchant
