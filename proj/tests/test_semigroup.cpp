#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kfp/semigroup.hpp"
#include "kfp/fiber.hpp"
#include "kfp/fullop.hpp"
#include "kfp/linalg.hpp"
#include "kfp/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <complex>
#include <vector>

using namespace kfp;
using Eigen::MatrixXcd;
using cd = std::complex<double>;

TEST_CASE("evolution matches the dense exponential and contracts") {
    HermiteTruncation trunc(8);
    Grid grid(GridSpec{-6.0, 6.0, 16});
    auto states = default_test_states(trunc, grid);
    REQUIRE(states.size() == 3);
    for (const auto& u : states) CHECK(state_norm(u, grid) == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("agrees with the exponential of the assembled generator") {
        const MatrixXcd P0 = assemble_free(trunc, grid);
        const MatrixXcd E = (-1.3 * P0).exp();
        const MatrixXcd got = evolve(1.3, states[0], trunc, grid);
        const MatrixXcd want = unflatten(E * flatten(states[0]), trunc.N, grid.size());
        CHECK((got - want).norm() / want.norm() <= 1e-12);
    }

    SUBCASE("identity at t = 0 and the semigroup composition law") {
        const MatrixXcd a = evolve(0.0, states[1], trunc, grid);
        CHECK((a - states[1]).norm() <= 1e-12);
        const MatrixXcd two_steps = evolve(1.7, evolve(0.8, states[1], trunc, grid), trunc, grid);
        const MatrixXcd one_step = evolve(2.5, states[1], trunc, grid);
        CHECK((two_steps - one_step).norm() / one_step.norm() <= 1e-8);
    }

    SUBCASE("norms decrease monotonically in time and never exceed the start") {
        HermiteTruncation tr(16);
        Grid g(GridSpec{-8.0, 8.0, 32});
        auto st = default_test_states(tr, g);
        double prev = 1.0;
        const std::vector<double> times = {0.3, 1.0, 5.0, 10.0};
        const std::vector<double> pinned = {0.879476289470, 0.807134133127, 0.542539975114,
                                            0.453543430924};
        for (size_t i = 0; i < times.size(); ++i) {
            const double n = state_norm(evolve(times[i], st[1], tr, g), g);
            CHECK(n <= prev + 1e-10);
            CHECK(n == doctest::Approx(pinned[i]).epsilon(1e-6));
            prev = n;
        }
    }

    SUBCASE("the ground mode times a flat profile is stationary") {
        HermiteTruncation tr(16);
        Grid g(GridSpec{-8.0, 8.0, 32});
        MatrixXcd u0 = MatrixXcd::Zero(16, 32);
        u0.row(0).setOnes();
        u0 /= state_norm(u0, g);
        const MatrixXcd ev = evolve(2.5, u0, tr, g);
        CHECK((ev - u0).norm() / u0.norm() <= 1e-10);
    }

    SUBCASE("spectral and scaling-squaring methods agree on a fiber") {
        const MatrixXcd me = fiber_evolution(2.0, 1.5, trunc, EvolutionPlan::Method::eigen);
        const MatrixXcd ms =
            fiber_evolution(2.0, 1.5, trunc, EvolutionPlan::Method::scaling_squaring);
        CHECK((me - ms).norm() / ms.norm() <= 1e-10);
    }

    SUBCASE("refuses times outside the supported horizon and bad plans") {
        CHECK_THROWS_AS((void)evolve(-0.1, states[0], trunc, grid), ValidationError);
        CHECK_THROWS_AS((void)evolve(10.5, states[0], trunc, grid), ValidationError);
        MatrixXcd bad = MatrixXcd::Zero(trunc.N + 1, grid.size());
        CHECK_THROWS_AS((void)evolve(1.0, bad, trunc, grid), ValidationError);
        EvolutionPlan plan;
        plan.times = {0.5, 0.4};
        CHECK_THROWS_AS(validate_plan(plan), ValidationError);
        plan.times = {0.5, 11.0};
        CHECK_THROWS_AS(validate_plan(plan), ValidationError);
        plan.times = {0.5, 1.0};
        plan.xi_grid = {std::nan("")};
        CHECK_THROWS_AS(validate_plan(plan), ValidationError);
        plan.xi_grid = {0.0, 1.0};
        CHECK_NOTHROW(validate_plan(plan));
    }
}

TEST_CASE("observable evolution identities hold through the flow") {
    // Reference resolution: the identities for v, d/dv, and x conjugated
    // through the flow are exact for the discretized generator, so the
    // residuals sit at roundoff, far beneath the 1e-6 working tolerance.
    HermiteTruncation trunc(64);
    Grid grid(GridSpec{-16.0, 16.0, 256});
    auto states = default_test_states(trunc, grid);

    SUBCASE("inner time zero reduces every identity to a tautology") {
        for (auto obs : {Observable::v, Observable::dv, Observable::x})
            CHECK(commutation_check(1.0, 0.0, obs, states, trunc, grid) <= 1e-12);
    }

    SUBCASE("interior point of the time triangle") {
        for (auto obs : {Observable::v, Observable::dv, Observable::x})
            CHECK(commutation_check(1.0, 0.5, obs, states, trunc, grid) <= 1e-6);
    }

    SUBCASE("edge and deep samples of the time triangle") {
        for (auto obs : {Observable::v, Observable::dv, Observable::x}) {
            CHECK(commutation_check(3.0, 3.0, obs, states, trunc, grid) <= 1e-6);
            CHECK(commutation_check(3.0, 1.5, obs, states, trunc, grid) <= 1e-6);
        }
    }

    SUBCASE("rejects inverted or out-of-range time pairs") {
        HermiteTruncation tr(8);
        Grid g(GridSpec{-6.0, 6.0, 16});
        auto st = default_test_states(tr, g);
        CHECK_THROWS_AS((void)commutation_check(0.5, 0.7, Observable::v, st, tr, g),
                        ValidationError);
        CHECK_THROWS_AS((void)commutation_check(1.0, -0.1, Observable::v, st, tr, g),
                        ValidationError);
        CHECK_THROWS_AS(
            (void)commutation_check(1.0, 0.5, Observable::v, {}, tr, g), ValidationError);
    }
}

TEST_CASE("position identity defect is cubic in the inner time") {
    // Dropping the position-shift generated by streaming (the term that
    // vanishes like sinh(s) - s) leaves a defect of exactly third order.
    HermiteTruncation trunc(16);
    Grid grid(GridSpec{-8.0, 8.0, 32});
    auto states = default_test_states(trunc, grid);
    const MatrixXcd& u = states[1];
    const double t = 1.0;
    const std::vector<double> svals = {0.1, 0.2, 0.4};
    const std::vector<double> pinned = {1.223912e-4, 9.943327e-4, 8.164853e-3};
    std::vector<double> defects;
    for (size_t i = 0; i < svals.size(); ++i) {
        const double s = svals[i];
        const double ch = std::cosh(s), sh = std::sinh(s);
        const MatrixXcd lhs = evolve(
            t - s, apply_observable(Observable::x, evolve(s, u, trunc, grid), trunc, grid),
            trunc, grid);
        const MatrixXcd truncated_arg =
            apply_observable(Observable::x, u, trunc, grid) +
            sh * apply_observable(Observable::v, u, trunc, grid) -
            2.0 * (ch - 1.0) * apply_observable(Observable::dv, u, trunc, grid);
        const MatrixXcd rhs = evolve(t, truncated_arg, trunc, grid);
        const double d = (lhs - rhs).norm() / lhs.norm();
        CHECK(d == doctest::Approx(pinned[i]).epsilon(1e-4));
        defects.push_back(d);
    }
    const double p1 = std::log(defects[1] / defects[0]) / std::log(2.0);
    const double p2 = std::log(defects[2] / defects[1]) / std::log(2.0);
    CHECK(std::abs(p1 - 3.0) <= 0.1);
    CHECK(std::abs(p2 - 3.0) <= 0.1);
}

TEST_CASE("smoothing integral is finite, certified, and quadrature-stable") {
    HermiteTruncation trunc(32);
    const std::vector<double> xi_grid = {0.0, 0.5, 1.0, 2.0};

    SUBCASE("power weight with matching vanishing order") {
        auto theta = [](double t) { return t * t; };
        const double v10 = smoothing_integral(theta, 1, 4.0, trunc, xi_grid, 10);
        const double v14 = smoothing_integral(theta, 1, 4.0, trunc, xi_grid, 14);
        CHECK(std::isfinite(v10));
        CHECK(v10 == doctest::Approx(21.3778806449).epsilon(1e-8));
        CHECK(std::abs(v10 - v14) / v14 <= 1e-10);
    }

    SUBCASE("flat weight needs no vanishing at order zero") {
        // The supremum over the frequency grid includes the zero fiber, where
        // the flow is a plain contraction: the integrand is identically one
        // and the integral equals the horizon length exactly.
        const double c10 = smoothing_integral([](double) { return 1.0; }, 0, 4.0, trunc,
                                              xi_grid, 10);
        const double c14 = smoothing_integral([](double) { return 1.0; }, 0, 4.0, trunc,
                                              xi_grid, 14);
        CHECK(c10 == doctest::Approx(4.0).epsilon(1e-9));
        CHECK(c14 == doctest::Approx(4.0).epsilon(1e-9));
    }

    SUBCASE("rejects weights lacking the certified vanishing order") {
        CHECK_THROWS_AS((void)smoothing_integral([](double t) { return t; }, 1, 4.0, trunc,
                                                 xi_grid, 10),
                        ValidationError);
    }

    SUBCASE("rejects malformed horizons, orders, grids, and panel counts") {
        auto ok = [](double t) { return t * t; };
        CHECK_THROWS_AS((void)smoothing_integral(ok, 1, 3.0, trunc, xi_grid, 10),
                        ValidationError);
        CHECK_THROWS_AS((void)smoothing_integral(ok, -1, 4.0, trunc, xi_grid, 10),
                        ValidationError);
        CHECK_THROWS_AS((void)smoothing_integral(ok, 1, 4.0, trunc, {}, 10), ValidationError);
        CHECK_THROWS_AS((void)smoothing_integral(ok, 1, 4.0, trunc, xi_grid, 1),
                        ValidationError);
        CHECK_THROWS_AS((void)smoothing_integral(ok, 1, 4.0, trunc, xi_grid, 41),
                        ValidationError);
    }

    SUBCASE("weighted powers of the flow decay quadratically in frequency") {
        const double n0 = semigroup_power_norm(5.0, 0.0, 1, trunc);
        const double n1 = semigroup_power_norm(5.0, 1.0, 1, trunc);
        const double n2 = semigroup_power_norm(5.0, 2.0, 1, trunc);
        CHECK(n0 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(n1 == doctest::Approx(9.565915e-2).epsilon(1e-5));
        CHECK(n2 == doctest::Approx(2.701492e-5).epsilon(1e-5));
        // One unit of time beyond a horizon T = 4 buys at least
        // exp(-(t-T)(xi2^2 - xi1^2)) = e^{-3} between these two fibers.
        CHECK(n2 / n1 <= std::exp(-3.0));
        CHECK(n1 < n0);
        CHECK_THROWS_AS((void)semigroup_power_norm(-1.0, 0.0, 1, trunc), ValidationError);
        CHECK_THROWS_AS((void)semigroup_power_norm(1.0, 0.0, -1, trunc), ValidationError);
    }
}

TEST_CASE("projection sums saturate their closed-form majorant") {
    HermiteTruncation trunc(32);

    SUBCASE("zero frequency: equality up to the dropped tail") {
        const auto p = projection_sum_bound(3.0, 0.0, 8, trunc);
        CHECK(p.rhs == doctest::Approx(1.0 / (1.0 - std::exp(-3.0))).epsilon(1e-12));
        CHECK(std::abs(p.rhs - 1.05233) <= 1e-4);
        CHECK(std::abs(p.lhs - p.rhs) <= 1e-10);
        CHECK(p.slack >= 0.0);
    }

    SUBCASE("interior point: strictly positive but razor-thin slack") {
        HermiteTruncation mid(48);
        const auto p = projection_sum_bound(2.0, 1.0, 8, mid);
        CHECK(p.lhs == doctest::Approx(2.162888117001).epsilon(1e-9));
        CHECK(p.rhs == doctest::Approx(2.162973788701).epsilon(1e-12));
        CHECK(p.slack > 0.0);
        CHECK(p.slack < 1e-4);
    }

    SUBCASE("long time: the retained terms exhaust the majorant") {
        const auto p = projection_sum_bound(10.0, 0.5, 8, trunc);
        CHECK(std::abs(p.slack) <= 1e-10);
        CHECK(p.slack >= -1e-12);
    }

    SUBCASE("majorant holds across the full time-frequency panel") {
        HermiteTruncation mid(48), big(80);
        for (double t : {0.5, 1.0, 2.0, 5.0, 10.0})
            for (double xi : {-3.0, -1.5, -0.5, 0.0, 0.7, 1.8, 3.0}) {
                const auto& tr = std::abs(xi) > 2.0 ? big : mid;
                const auto p = projection_sum_bound(t, xi, 8, tr);
                CHECK(std::isfinite(p.lhs));
                CHECK(p.slack >= -1e-12 * std::max(1.0, p.rhs));
            }
    }

    SUBCASE("spectral projection norms are truncation-stable and exact at the ground mode") {
        const double pi0 = operator_norm(riesz_projection(0, 1.0, trunc));
        CHECK(pi0 == doctest::Approx(std::exp(2.0)).epsilon(1e-10));
        const double pi2 = operator_norm(riesz_projection(2, 1.0, trunc));
        const double pi4 = operator_norm(riesz_projection(4, 1.0, trunc));
        CHECK(pi2 == doctest::Approx(125.6139537).epsilon(1e-8));
        CHECK(pi4 == doctest::Approx(874.3716384).epsilon(1e-8));
        HermiteTruncation bigger(40);
        CHECK(std::abs(operator_norm(riesz_projection(0, 1.0, bigger)) - pi0) / pi0 <= 1e-12);
        CHECK(std::abs(operator_norm(riesz_projection(2, 1.0, bigger)) - pi2) / pi2 <= 1e-12);
        CHECK(std::abs(operator_norm(riesz_projection(4, 1.0, bigger)) - pi4) / pi4 <= 1e-12);
        // High frequency needs a deep truncation; the certified norm then
        // matches exp(2 xi^2) at the ground mode and stays put under growth.
        HermiteTruncation deep(64), deeper(72);
        const double q0 = operator_norm(riesz_projection(0, 3.0, deep));
        CHECK(q0 == doctest::Approx(std::exp(18.0)).epsilon(1e-8));
        CHECK(std::abs(operator_norm(riesz_projection(0, 3.0, deeper)) - q0) / q0 <= 1e-12);
    }

    SUBCASE("rejects untrustworthy mode ranges and degenerate times") {
        CHECK_THROWS_AS((void)projection_sum_bound(0.0, 0.0, 8, trunc), ValidationError);
        CHECK_THROWS_AS((void)projection_sum_bound(1.0, 0.0, -1, trunc), ValidationError);
        CHECK_THROWS_AS((void)projection_sum_bound(1.0, 0.0, trunc.N / 2 + 1, trunc),
                        ValidationError);
    }
}
