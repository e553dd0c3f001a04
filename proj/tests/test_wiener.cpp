#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "merchant/coins.hpp"
#include "merchant/errors.hpp"
#include "merchant/quadrature.hpp"
#include "merchant/rng.hpp"
#include "merchant/wiener.hpp"

using namespace merchant;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("time scales: deltas, times, products") {
    const TimeScale equi = TimeScale::equidistant();
    CHECK_FALSE(equi.perturbed());
    CHECK(equi.delta(5) == 1.0);
    CHECK(equi.time(7) == 7.0);
    CHECK(equi.log_product_total() == 0.0);

    const TimeScale e2 = TimeScale::exp2();
    CHECK(e2.perturbed());
    CHECK(e2.delta(1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(e2.delta(3) == doctest::Approx(std::exp(-0.125)).epsilon(1e-15));
    // infinite product is exactly exp(-1)
    CHECK(std::exp(e2.log_product_total()) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    // prefix sums agree with term-by-term accumulation
    double acc = 0.0;
    for (std::int64_t m = 1; m <= 40; ++m) {
        acc += e2.log_delta(m);
        CHECK(e2.log_product_prefix(m) == doctest::Approx(acc).epsilon(1e-15));
    }
    // weights: (1-delta)/delta = e^{2^-m} - 1, spot-checked at 25 digits
    CHECK(e2.weight(1) == doctest::Approx(0.6487212707001281468486508).epsilon(1e-14));
    CHECK(e2.weight(2) == doctest::Approx(0.2840254166877414840734206).epsilon(1e-14));
    CHECK(e2.weight(5) == doctest::Approx(0.03174340749910267093874782).epsilon(1e-14));
    CHECK(e2.weight(6) == doctest::Approx(0.01574770858668574745853507).epsilon(1e-14));

    const TimeScale custom = TimeScale::custom({0.5, 0.25});
    CHECK(custom.perturbed());
    CHECK(custom.delta(1) == 0.5);
    CHECK(custom.delta(2) == 0.25);
    CHECK(custom.delta(3) == 1.0);  // tail
    CHECK(custom.time(3) == doctest::Approx(1.75));
    CHECK(custom.log_product_total() == doctest::Approx(std::log(0.125)));
    CHECK_THROWS_AS(TimeScale::custom({0.5, 1.0}), InvalidConfig);
    CHECK_THROWS_AS(TimeScale::custom({}), InvalidConfig);
    CHECK_THROWS_AS(TimeScale::by_name("nope"), InvalidConfig);
}

TEST_CASE("green kernel: value, normalization, Chapman-Kolmogorov") {
    // zero exponent, unit step
    CHECK(green(0.3, 1.5, 0.3, 0.5) == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)));
    CHECK_THROWS_AS(green(0.0, 1.0, 0.0, 1.0), InvalidTimes);
    CHECK_THROWS_AS(green(0.0, 0.5, 0.0, 1.0), InvalidTimes);

    RngStream rng(99, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const double s = 2.0 * rng.next_unit();
        const double dt = 0.2 + 3.0 * rng.next_unit();
        const double t = s + dt;
        const double y = 2.0 * rng.next_normal();
        // normalization over x
        const double reach = 14.0 * std::sqrt(dt);
        const double mass = integrate_or_throw(
            [&](double x) { return green(x, t, y, s); }, y - reach, y + reach, 1e-12, 1e-12);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));

        // Chapman-Kolmogorov at an interior time
        const double tau = s + dt * (0.2 + 0.6 * rng.next_unit());
        const double x = y + rng.next_normal();
        const double reach2 = 14.0 * std::sqrt(dt);
        const double conv = integrate_or_throw(
            [&](double xi) { return green(x, t, xi, tau) * green(xi, tau, y, s); },
            y - reach2, y + reach2, 1e-13, 1e-11);
        CHECK(conv == doctest::Approx(green(x, t, y, s)).epsilon(1e-9));
    }
}

TEST_CASE("trajectories: pinned start, increment variance, replay") {
    const TimeScale equi = TimeScale::equidistant();
    const Trajectory t1 = sample_trajectory(equi, 16, 5, 3);
    const Trajectory t2 = sample_trajectory(equi, 16, 5, 3);
    REQUIRE(t1.length() == 16);
    CHECK(t1.positions[0] == 0.0);
    CHECK(t1.times[0] == 0.0);
    for (std::size_t i = 0; i < t1.positions.size(); ++i)
        CHECK(t1.positions[i] == t2.positions[i]);

    const int n = 1'000'000;
    double sum_sq = 0.0;
    for (int k = 0; k < n; ++k) {
        const Trajectory tr = sample_trajectory(equi, 1, 11, static_cast<std::uint64_t>(k));
        sum_sq += tr.positions[1] * tr.positions[1];
    }
    const double var = sum_sq / n;
    CHECK(std::fabs(var - 0.5) < 3.0 * 0.5 * std::sqrt(2.0 / n));
}

TEST_CASE("cylinder measures: closed cases and Monte Carlo cross-check") {
    const TimeScale equi = TimeScale::equidistant();

    GateSpec full;
    full.times = {1.0, 2.0};
    full.gates = {{-kInf, kInf}, {-kInf, kInf}};
    CHECK(cylinder_measure(full, equi) == doctest::Approx(1.0).epsilon(1e-9));

    GateSpec half;
    half.times = {1.0};
    half.gates = {{0.0, kInf}};
    CHECK(cylinder_measure(half, equi) == doctest::Approx(0.5).epsilon(1e-9));

    GateSpec two;
    two.times = {1.0, 2.0};
    two.gates = {{-0.5, 1.0}, {0.0, 2.0}};
    const double quad = cylinder_measure(two, equi);
    std::int64_t hits = 0;
    const std::int64_t trials = 1'000'000;
    for (std::int64_t k = 0; k < trials; ++k) {
        const Trajectory tr = sample_trajectory(equi, 2, 2718, static_cast<std::uint64_t>(k));
        if (tr.positions[1] > -0.5 && tr.positions[1] < 1.0 && tr.positions[2] > 0.0 &&
            tr.positions[2] < 2.0)
            ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(trials);
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(trials));
    CHECK(std::fabs(quad - p) <= 3.0 * se);

    // three gates on a perturbed scale with absolute times
    const TimeScale e2 = TimeScale::exp2();
    GateSpec three;
    three.times = {e2.time(1), e2.time(2), e2.time(3)};
    three.gates = {{-1.0, 1.0}, {-1.0, kInf}, {0.25, 1.5}};
    const double quad3 = cylinder_measure(three, e2);
    std::int64_t hits3 = 0;
    for (std::int64_t k = 0; k < trials; ++k) {
        const Trajectory tr = sample_trajectory(e2, 3, 999, static_cast<std::uint64_t>(k));
        if (tr.positions[1] > -1.0 && tr.positions[1] < 1.0 && tr.positions[2] > -1.0 &&
            tr.positions[3] > 0.25 && tr.positions[3] < 1.5)
            ++hits3;
    }
    const double p3 = static_cast<double>(hits3) / static_cast<double>(trials);
    const double se3 = std::sqrt(p3 * (1 - p3) / static_cast<double>(trials));
    CHECK(std::fabs(quad3 - p3) <= 3.0 * se3);

    GateSpec bad;
    bad.times = {1.0, 1.0};
    bad.gates = {{0.0, 1.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(cylinder_measure(bad, equi), InvalidConfig);
}

TEST_CASE("sobolev norms") {
    const TimeScale equi = TimeScale::equidistant();
    const TimeScale e2 = TimeScale::exp2();

    Trajectory flat;
    flat.times = {0.0, 1.0, 2.0};
    flat.positions = {0.0, 0.0, 0.0};
    CHECK(sobolev_norm_sq(flat) == 0.0);
    CHECK(weighted_sobolev_norm_sq(flat, e2).value == 0.0);

    Trajectory hat;
    hat.times = {0.0, 1.0, 2.0};
    hat.positions = {0.0, 1.0, 0.0};
    CHECK(sobolev_norm_sq(hat) == 2.0);

    const WeightedSobolev zero = weighted_sobolev_norm_sq(hat, equi);
    CHECK(zero.zero_weights);
    CHECK(zero.value == 0.0);

    const WeightedSobolev w = weighted_sobolev_norm_sq(hat, e2);
    CHECK_FALSE(w.zero_weights);
    CHECK(w.value == doctest::Approx(0.6487212707001281 + 0.2840254166877415).epsilon(1e-14));
}

TEST_CASE("quasi-loops") {
    Trajectory flat;
    flat.times = {0.0, 1.0, 2.0};
    flat.positions = {0.0, 0.0, 0.0};
    CHECK(is_quasi_loop(flat, 1e-12));

    Trajectory spike;
    spike.times = {0.0, 1.0};
    spike.positions = {0.0, 2.0};  // x_1^2 = 4 = 2C t_1 at C = 2
    CHECK_FALSE(is_quasi_loop(spike, 2.0));
    CHECK(is_quasi_loop(spike, 4.0 + 1e-12));

    // fraction climbs to 1 as C grows; reflection tail bounds the deficit
    const TimeScale equi = TimeScale::equidistant();
    double prev = 0.0;
    for (double c : {0.5, 2.0, 8.0, 32.0}) {
        const McEstimate frac = mc_quasi_loop_fraction(equi, 32, c, 20000, 4242);
        CHECK(frac.p_hat >= prev);
        prev = frac.p_hat;
    }
    CHECK(prev > 0.99);
}

TEST_CASE("radon-nikodym weight: closed form and mean-one normalization") {
    const TimeScale e2 = TimeScale::exp2();
    Trajectory flat;
    flat.times = {0.0, e2.time(1), e2.time(2)};
    flat.positions = {0.0, 0.0, 0.0};
    // constant path: exponent zero, weight = prod delta^{-1/2}
    CHECK(radon_nikodym_weight(flat, e2) ==
          doctest::Approx(std::exp(0.5 * (0.5 + 0.25))).epsilon(1e-14));

    const TimeScale equi = TimeScale::equidistant();
    CHECK_THROWS_AS(radon_nikodym_weight(flat, equi), InvalidConfig);

    // grows when any increment shrinks toward zero, falls when it grows
    Trajectory bump = flat;
    bump.positions = {0.0, 0.5, 0.5};
    const double w_small = radon_nikodym_weight(bump, e2);
    bump.positions = {0.0, 1.0, 1.0};
    const double w_large = radon_nikodym_weight(bump, e2);
    CHECK(w_large < w_small);
    CHECK(w_small < radon_nikodym_weight(flat, e2));

    // E_W[weight] = 1 at every truncation
    for (std::int64_t len : {1, 8, 64}) {
        const std::int64_t trials = 200'000;
        double sum = 0.0, sum_sq = 0.0;
        for (std::int64_t k = 0; k < trials; ++k) {
            const Trajectory tr = sample_trajectory(equi, len, 87, static_cast<std::uint64_t>(k));
            const double w = radon_nikodym_weight(tr, e2);
            sum += w;
            sum_sq += w * w;
        }
        const double mean = sum / static_cast<double>(trials);
        const double var = sum_sq / static_cast<double>(trials) - mean * mean;
        const double se = std::sqrt(var / static_cast<double>(trials));
        CHECK(std::fabs(mean - 1.0) <= 3.0 * se);
    }
}

TEST_CASE("brownian indistinguishable set membership") {
    const TimeScale e2 = TimeScale::exp2();
    Trajectory tr;
    tr.times = {0.0, e2.time(1), e2.time(2), e2.time(3)};
    tr.positions = {0.0, 0.4, 0.1, 0.6};

    // zeroed coordinate: always a member for nonconstant paths
    Trajectory zeroed = tr;
    zeroed.positions[2] = 0.0;
    for (double t_exp : {1.0, 100.0, 10000.0})
        CHECK(in_indistinguishable_brownian(zeroed, 2, 0.1, 0.01, t_exp, e2));

    // constant path: both sides zero, strict inequality fails
    Trajectory flat;
    flat.times = tr.times;
    flat.positions = {0.0, 0.0, 0.0, 0.0};
    CHECK_FALSE(in_indistinguishable_brownian(flat, 2, 0.1, 0.01, 10.0, e2));

    // T -> infinity expels any nonzero coordinate
    CHECK_FALSE(in_indistinguishable_brownian(tr, 2, 0.1, 0.01, 500.0, e2));

    CHECK_THROWS_AS(in_indistinguishable_brownian(tr, 9, 0.1, 0.01, 10.0, e2), IndexError);
    CHECK_THROWS_AS(in_indistinguishable_brownian(tr, 0, 0.1, 0.01, 10.0, e2), IndexError);
}

TEST_CASE("wiener bound: formula, clamping, eta inversion") {
    const TimeScale e2 = TimeScale::exp2();
    // exp2 scale: bound = sqrt(eps e / ((1+gamma)^T - 1 - eps))
    const double t_exp = 50.0;
    const WienerBound b = wiener_bound(0.01, 0.1, t_exp, e2);
    const double g = std::expm1(t_exp * std::log1p(0.1));
    CHECK(b.raw ==
          doctest::Approx(std::sqrt(0.01 * std::numbers::e / (g - 0.01))).epsilon(1e-12));
    CHECK(b.clamped == b.raw);

    // T below the applicability threshold
    CHECK_THROWS_AS(wiener_bound(0.5, 0.001, 100.0, e2), BoundNotApplicable);

    // bound falls to zero as T grows
    CHECK(wiener_bound(0.01, 0.1, 400.0, e2).raw < 1e-8);

    // raw value above 1 near the threshold is clamped for reporting
    const WienerBound tight = wiener_bound(0.01, 0.1, 0.2, e2);
    CHECK(tight.raw > 1.0);
    CHECK(tight.clamped == 1.0);

    // frozen oracle: T_eta(0.05) = log_{1.1}(0.01 e / 0.0025 + 1.01)
    const double t_eta = t_eta_brownian(0.01, 0.1, 0.05, e2);
    CHECK(t_eta == doctest::Approx(25.96909927438325500449348).epsilon(1e-13));
    // inversion: the bound at T_eta equals eta
    CHECK(wiener_bound(0.01, 0.1, t_eta, e2).raw == doctest::Approx(0.05).epsilon(1e-12));
    // eta -> 1 gives the smallest stopping time
    CHECK(t_eta_brownian(0.01, 0.1, 0.9, e2) < t_eta_brownian(0.01, 0.1, 0.5, e2));
    CHECK(t_eta_brownian(0.01, 0.1, 0.5, e2) < t_eta);
}

TEST_CASE("mc wiener: two estimators agree, bound dominates, trunc stability") {
    const TimeScale e2 = TimeScale::exp2();
    const std::int64_t trials = 30'000;
    for (double t_exp : {40.0, 60.0, 90.0}) {
        const WienerMcResult r =
            mc_wiener_indistinguishable(1, 0.1, 0.01, t_exp, e2, 64, trials, 77);
        REQUIRE(r.bound_raw.has_value());
        CHECK(r.agree_3se);
        CHECK(r.direct.p_hat <= *r.bound_raw + 3.0 * r.direct.std_err);
        CHECK(r.reweighted.estimate <= *r.bound_raw + 3.0 * r.reweighted.std_err);
        CHECK(r.reweighted.ess > static_cast<double>(trials) / 2.0);
        // mean reweighting weight is 1
        CHECK(std::fabs(r.reweighted.mean_weight - 1.0) <=
              3.0 * r.reweighted.mean_weight_std_err);
    }

    // below the applicability threshold the estimate still runs
    const WienerMcResult low =
        mc_wiener_indistinguishable(1, 0.001, 0.5, 5.0, e2, 16, 2000, 3);
    CHECK_FALSE(low.bound_raw.has_value());
    CHECK(low.direct.trials == 2000);

    // estimates at N and 2N agree within joint CI (N0 = 32 for exp2: the
    // weight tail 2^-m contributes ~1e-10 to the norm there)
    const WienerMcResult n32 = mc_wiener_indistinguishable(1, 0.1, 0.01, 40.0, e2, 32, trials, 9);
    const WienerMcResult n64 = mc_wiener_indistinguishable(1, 0.1, 0.01, 40.0, e2, 64, trials, 9);
    const double joint =
        std::sqrt(n32.direct.std_err * n32.direct.std_err +
                  n64.direct.std_err * n64.direct.std_err);
    CHECK(std::fabs(n32.direct.p_hat - n64.direct.p_hat) <= 3.0 * joint);

    // sup-over-j mode reports a larger (conservative) set
    const WienerMcResult sup = mc_wiener_indistinguishable(1, 0.1, 0.01, 40.0, e2, 64, trials, 77,
                                                           FalseIndexMode::kSupremum);
    const WienerMcResult inj = mc_wiener_indistinguishable(1, 0.1, 0.01, 40.0, e2, 64, trials, 77,
                                                           FalseIndexMode::kInjected);
    CHECK(sup.direct.p_hat >= inj.direct.p_hat);

    // degenerate custom scale with exploding weights trips the ESS guard
    const TimeScale harsh = TimeScale::custom(std::vector<double>(10, 0.01));
    CHECK_THROWS_AS(mc_wiener_indistinguishable(1, 0.1, 0.01, 40.0, harsh, 10, 2000, 5),
                    UnstableWeights);
}

TEST_CASE("reflection principle tail on the equidistant walk") {
    const TimeScale equi = TimeScale::equidistant();
    const std::int64_t n = 64, trials = 200'000;
    for (double mult : {1.0, 2.0}) {
        const double a = mult * std::sqrt(static_cast<double>(n));
        const ReflectionTail r = reflection_tail_estimate(equi, n, a, trials, 13);
        const double se =
            std::sqrt(r.max_exceeds.std_err * r.max_exceeds.std_err +
                      4.0 * r.end_exceeds.std_err * r.end_exceeds.std_err);
        CHECK(r.max_exceeds.p_hat <= 2.0 * r.end_exceeds.p_hat + 3.0 * se);
        // sanity: the analytic end tail is erfc(a / sqrt(N))
        const double analytic = std::erfc(a / std::sqrt(static_cast<double>(n)));
        CHECK(std::fabs(r.end_exceeds.p_hat - analytic) <= 4.0 * r.end_exceeds.std_err + 1e-4);
    }
}

TEST_CASE("brownian bayes posterior") {
    const TimeScale e2 = TimeScale::exp2();
    const double t_exp = 60.0;
    const WienerBound b = wiener_bound(0.01, 0.1, t_exp, e2);
    const BrownianPosterior p = bayes_posterior_brownian(0.5, 0.01, 0.1, t_exp, e2);
    CHECK(p.lower_bound == doctest::Approx(1.0 - b.raw).epsilon(1e-13));
    // same Bayes algebra as the finite device
    CHECK(p.point == doctest::Approx(0.5 / (0.5 + 0.5 * b.clamped)).epsilon(1e-13));
    // posterior floor climbs to 1 with T
    CHECK(bayes_posterior_brownian(0.5, 0.01, 0.1, 200.0, e2).lower_bound >
          bayes_posterior_brownian(0.5, 0.01, 0.1, 100.0, e2).lower_bound);
    CHECK(bayes_posterior_brownian(0.5, 0.01, 0.1, 500.0, e2).lower_bound ==
          doctest::Approx(1.0).epsilon(1e-8));
}
