#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "merchant/coins.hpp"
#include "merchant/errors.hpp"
#include "merchant/rng.hpp"

using namespace merchant;

namespace {

using Rational = boost::multiprecision::cpp_rational;
using BigFloat = boost::multiprecision::cpp_bin_float_50;

// Exact-arithmetic oracle for the quadratic form: gamma and the coordinates
// are rationals, (1+gamma)^t is an exact rational power.
double exact_quadratic_form(const std::vector<Rational>& x, std::int64_t j, Rational gamma,
                            std::int64_t t) {
    Rational norm_sq = 0;
    for (const auto& c : x) norm_sq += c * c;
    Rational value = norm_sq;
    if (j >= 1 && j <= static_cast<std::int64_t>(x.size())) {
        Rational pow = 1;
        const Rational base = 1 + gamma;
        for (std::int64_t i = 0; i < t; ++i) pow *= base;
        value += (pow - 1) * x[static_cast<std::size_t>(j - 1)] * x[static_cast<std::size_t>(j - 1)];
    }
    return static_cast<double>(static_cast<BigFloat>(value));
}

// Brute-force oracle for the base-2 weighing: try every subset of stacks.
std::set<std::int64_t> base2_brute_force(double measured_total, std::int64_t n_stacks,
                                         double gamma) {
    for (std::int64_t mask = 0; mask < (std::int64_t{1} << n_stacks); ++mask) {
        double total = 0.0;
        for (std::int64_t i = 1; i <= n_stacks; ++i) {
            const double coins = static_cast<double>(std::int64_t{1} << (i - 1));
            const double w = (mask & (std::int64_t{1} << (i - 1))) ? 1.0 + gamma : 1.0;
            total += coins * w;
        }
        if (std::fabs(total - measured_total) < 0.25 * gamma) {
            std::set<std::int64_t> out;
            for (std::int64_t i = 1; i <= n_stacks; ++i)
                if (mask & (std::int64_t{1} << (i - 1))) out.insert(i);
            return out;
        }
    }
    throw std::runtime_error("brute force: no subset matches");
}

}  // namespace

TEST_CASE("classical weighing decodes the stack index") {
    CHECK(classical_weighting(15.003, 0.001) == 3);
    CHECK(classical_weighting(15.005, 0.001) == 5);
    CHECK(classical_weighting(15.001, 0.001) == 1);
    CHECK_THROWS_AS(classical_weighting(15.0004, 0.001), MalformedMeasurement);
    CHECK_THROWS_AS(classical_weighting(15.006, 0.001), MalformedMeasurement);
    CHECK_THROWS_AS(classical_weighting(15.000, 0.001), MalformedMeasurement);
}

TEST_CASE("base-2 weighing decodes false-stack sets") {
    CHECK(base2_weighting(31.005, 5, 0.001) == std::set<std::int64_t>{1, 3});
    CHECK(base2_weighting(31.000, 5, 0.001) == std::set<std::int64_t>{});
    CHECK(base2_weighting(31.031, 5, 0.001) == std::set<std::int64_t>{1, 2, 3, 4, 5});
    CHECK_THROWS_AS(base2_weighting(31.0004, 5, 0.001), MalformedMeasurement);
    CHECK_THROWS_AS(base2_weighting(31.032, 5, 0.001), MalformedMeasurement);

    // brute-force agreement over every single- and double-stack subset
    for (std::int64_t mask = 0; mask < 32; ++mask) {
        double total = 0.0;
        for (std::int64_t i = 1; i <= 5; ++i) {
            const double coins = static_cast<double>(std::int64_t{1} << (i - 1));
            total += coins * ((mask & (std::int64_t{1} << (i - 1))) ? 1.001 : 1.0);
        }
        CHECK(base2_weighting(total, 5, 0.001) == base2_brute_force(total, 5, 0.001));
    }
}

TEST_CASE("quadratic form closed form") {
    const TestVector x({1.0, 1.0});
    const CoinSystem all_true = CoinSystem::all_true(2);
    for (std::int64_t t : {0, 1, 5, 100, 100000})
        CHECK(quadratic_form(all_true, x, t).value == x.norm_sq());

    const double gamma = 0.25;
    const CoinSystem sys = CoinSystem::with_false(2, 2, gamma);
    for (std::int64_t t : {0, 1, 2, 7}) {
        const double expected = 1.0 + std::pow(1.0 + gamma, static_cast<double>(t));
        CHECK(quadratic_form(sys, x, t).value == doctest::Approx(expected).epsilon(1e-14));
    }

    // Q^0 is the identity
    const CoinSystem tiny = CoinSystem::with_false(2, 2, 0.001);
    CHECK(quadratic_form(tiny, TestVector({0.0, 1.0}), 0).value == doctest::Approx(1.0));

    // false stack outside the probe prefix contributes nothing
    const CoinSystem far = CoinSystem::countable_with_false(10, 0.1);
    CHECK(quadratic_form(far, x, 50).value == x.norm_sq());
}

TEST_CASE("quadratic form overflow reports the sentinel") {
    const CoinSystem sys = CoinSystem::with_false(2, 1, 0.5);
    const TestVector x({1.0, 1.0});
    const auto r = quadratic_form(sys, x, 10'000);
    CHECK(r.overflowed);
    CHECK(std::isinf(r.value));
}

TEST_CASE("log-domain form matches exact rational arithmetic to 1e-12") {
    // gamma >= 1e-3, t <= 1000 per the stated guarantee
    const std::vector<std::pair<Rational, double>> gammas = {
        {Rational(1, 1000), 0.001}, {Rational(1, 100), 0.01}, {Rational(1, 10), 0.1}};
    const std::vector<Rational> xr = {Rational(3, 2), Rational(-1, 3), Rational(7, 5)};
    std::vector<double> xd;
    for (const auto& c : xr) xd.push_back(static_cast<double>(static_cast<BigFloat>(c)));
    const TestVector x(xd);
    for (const auto& [gr, gd] : gammas) {
        const CoinSystem sys = CoinSystem::with_false(3, 2, gd);
        for (std::int64_t t : {1, 10, 100, 500, 1000}) {
            const double exact = exact_quadratic_form(xr, 2, gr, t);
            const double got = quadratic_form(sys, x, t).value;
            CHECK(std::fabs(got - exact) / exact <= 1e-12);
        }
    }
}

TEST_CASE("clicks: all-true systems never click, zeroed coordinates never click") {
    const CoinSystem all_true = CoinSystem::all_true(4);
    const CoinSystem false3 = CoinSystem::with_false(4, 3, 0.1);
    RngStream stream(7, 0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> c(4);
        for (auto& v : c) v = stream.next_normal();
        c[2] = 0.0;  // kill the false coordinate
        const TestVector x(c);
        if (x.norm_sq() == 0.0) continue;
        for (std::int64_t t : {1, 10, 1000, 100000}) {
            CHECK_FALSE(clicks(all_true, x, t, 0.01));
            CHECK_FALSE(clicks(false3, x, t, 0.01));
        }
    }
    CHECK_THROWS_AS(clicks(all_true, TestVector({0.0, 0.0, 0.0, 0.0}), 1, 0.01), NullProbe);
}

TEST_CASE("soundness: a click implies a false stack") {
    // exhaustive over small deterministic probes: all-true never clicks, so
    // any click seen below comes from the false system
    RngStream stream(11, 1);
    const CoinSystem all_true = CoinSystem::all_true(3);
    const CoinSystem falsy = CoinSystem::with_false(3, 1, 0.2);
    int clicks_false = 0;
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<double> c(3);
        for (auto& v : c) v = stream.next_normal();
        const TestVector x(c);
        for (std::int64_t t : {1, 5, 25, 125}) {
            CHECK_FALSE(clicks(all_true, x, t, 0.05));
            if (clicks(falsy, x, t, 0.05)) ++clicks_false;
        }
    }
    CHECK(clicks_false > 0);
}

TEST_CASE("monotone growth in t; divergence beyond any bound") {
    const CoinSystem sys = CoinSystem::with_false(2, 1, 0.05);
    const TestVector x({0.7, -0.3});
    double prev = quadratic_form(sys, x, 0).value;
    for (std::int64_t t = 1; t <= 60; ++t) {
        const double cur = quadratic_form(sys, x, t).value;
        CHECK(cur > prev);
        prev = cur;
    }
    // ratio exceeds any fixed bound for t large enough
    for (double bound : {10.0, 1e3, 1e6}) {
        std::int64_t t = 1;
        while (quadratic_form(sys, x, t).value / x.norm_sq() <= bound) {
            t *= 2;
            REQUIRE(t < (std::int64_t{1} << 40));
        }
        CHECK(quadratic_form(sys, x, t).value / x.norm_sq() > bound);
    }
}

TEST_CASE("first click time: threshold formula vs linear scan") {
    const double gamma = 0.1, epsilon = 0.01;
    const TestVector x({1.0, 1.0});
    const std::int64_t t_star = first_click_time(x, 2, gamma, epsilon);
    const CoinSystem sys = CoinSystem::with_false(2, 2, gamma);
    // scan oracle: clicks is false strictly below t_star and true at t_star
    for (std::int64_t t = 0; t < t_star; ++t) CHECK_FALSE(clicks(sys, x, t, epsilon));
    CHECK(clicks(sys, x, t_star, epsilon));

    // randomized instances
    RngStream stream(23, 5);
    for (int rep = 0; rep < 50; ++rep) {
        const double g = 0.001 + 0.3 * stream.next_unit();
        const double e = 0.001 + 0.5 * stream.next_unit();
        std::vector<double> c(3);
        for (auto& v : c) v = stream.next_normal();
        if (c[0] == 0.0) continue;
        const TestVector probe(c);
        const std::int64_t ts = first_click_time(probe, 1, g, e);
        const CoinSystem s = CoinSystem::with_false(3, 1, g);
        CHECK(clicks(s, probe, ts, e));
        if (ts > 1) CHECK_FALSE(clicks(s, probe, ts - 1, e));
    }
}

TEST_CASE("first click time honors the closed-form threshold and error cases") {
    // threshold log_{1+gamma}(1+eps) for a lone nonzero coordinate
    const TestVector e1({1.0, 0.0, 0.0});
    for (double gamma : {0.001, 0.1, 0.5}) {
        for (double eps : {0.01, 0.1, 1e-6}) {
            const std::int64_t t = first_click_time(e1, 1, gamma, eps);
            const double threshold = std::log1p(eps) / std::log1p(gamma);
            CHECK(static_cast<double>(t) > threshold);
            CHECK(static_cast<double>(t - 1) <= threshold + 1.0);
        }
    }
    CHECK_THROWS_AS(first_click_time(e1, 2, 0.1, 0.01), NeverClicks);
    CHECK_THROWS_AS(first_click_time(e1, 9, 0.1, 0.01), IndexError);
}

TEST_CASE("t_eta_finite: frozen high-precision oracle") {
    // independent 50-digit evaluation of the closed form
    const double oracle = 11544.25133444115334041394;
    CHECK(std::fabs(t_eta_finite(5, 0.01, 0.001, 0.1) - oracle) / oracle <= 1e-12);
    const long double ext = t_eta_finite_ext(5, 0.01, 0.001, 0.1);
    CHECK(std::fabs(static_cast<double>(ext) - oracle) / oracle <= 1e-14);

    // eta -> 1 with tiny epsilon sends the argument to 1 and T to 0
    const double near_zero = t_eta_finite(1, 1e-12, 0.5, 0.999999);
    CHECK(near_zero >= 0.0);
    CHECK(near_zero < 1e-9);

    // doubling N multiplies the argument's first term by 8
    const double pi2 = 9.869604401089358;
    for (std::int64_t n : {2, 4, 8}) {
        const double a1 = 81.0 * std::pow(n, 3) * 0.01 / (1e-4 * pi2);
        const double a2 = 81.0 * std::pow(2 * n, 3) * 0.01 / (1e-4 * pi2);
        CHECK(a2 / a1 == doctest::Approx(8.0).epsilon(1e-12));
        const double t1 = t_eta_finite(n, 0.01, 0.001, 0.1);
        const double t2 = t_eta_finite(2 * n, 0.01, 0.001, 0.1);
        CHECK(std::expm1(t2 * std::log1p(0.001)) / std::expm1(t1 * std::log1p(0.001)) ==
              doctest::Approx(8.0).epsilon(1e-6));
    }

    CHECK_THROWS_AS(t_eta_finite(5, 0.01, 0.001, 1.5), InvalidConfig);
    CHECK_THROWS_AS(t_eta_finite(5, 0.01, 0.001, 0.0), InvalidConfig);
}

TEST_CASE("domain validation") {
    CHECK_THROWS_AS(CoinSystem::with_false(5, 6, 0.1), InvalidConfig);
    CHECK_THROWS_AS(CoinSystem::with_false(5, 0, 0.1), InvalidConfig);
    CHECK_THROWS_AS(CoinSystem::with_false(5, 1, 1.5), InvalidConfig);
    CHECK_THROWS_AS(CoinSystem::with_false(5, 1, 0.0), InvalidConfig);
    const CoinSystem c = CoinSystem::countable_with_false(1'000'000, 0.5);
    CHECK(c.q(999'999) == 1.0);
    CHECK(c.q(1'000'000) == 1.5);
    CHECK(c.q(1'000'001) == 1.0);
    CHECK_THROWS_AS(CoinSystem::all_true(3).q(4), IndexError);
    CHECK_THROWS_AS((DeviceConfig{0.0, 0.5, 0.1}).validate(), InvalidConfig);
    CHECK_THROWS_AS((DeviceConfig{0.1, 0.5, -0.1}).validate(), InvalidConfig);
}

TEST_CASE("growth factor is the normative log-domain order") {
    for (double gamma : {1e-6, 1e-3, 0.1, 0.9}) {
        for (double t : {1.0, 2.0, 1000.0}) {
            CHECK(growth_factor(gamma, t) ==
                  std::expm1(t * std::log1p(gamma)));
        }
    }
    CHECK(growth_factor(0.1, 0.0) == 0.0);
}
