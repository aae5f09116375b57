// Tests for the decay toolbox: the rate function tau, the conjugated-operator
// margin, exponential-rate fitting on shell maxima, and moment diagnostics.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "kfp/decay.hpp"

#include <Eigen/Dense>
#include <complex>
#include <limits>

#include "doctest.h"
#include "kfp/bs.hpp"
#include "kfp/errors.hpp"
#include "kfp/fullop.hpp"
#include "kfp/linalg.hpp"
#include "kfp/resolvent.hpp"

using namespace kfp;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cd = std::complex<double>;

namespace {

// State with point values ~ e^{-(<x> + v^2)}: Hermite projection of the
// velocity Gaussian tensored with the exponential envelope in x.
MatrixXcd synthetic_decaying_state(const HermiteTruncation& trunc, const Grid& grid) {
    const int N = trunc.N, M = grid.size();
    VectorXd cj = VectorXd::Zero(N);
    const PointEval pe = phi_point_matrix(trunc, std::numeric_limits<double>::infinity());
    for (int j = 0; j < N; ++j) {
        double acc = 0.0;
        for (size_t q = 0; q < pe.nodes.size(); ++q)
            acc += pe.weights[q] * std::exp(-pe.nodes[q] * pe.nodes[q]) * pe.values(q, j);
        cj(j) = acc;
    }
    MatrixXcd u(N, M);
    for (int i = 0; i < M; ++i) {
        const double x = grid.nodes()(i);
        u.col(i) = cj.cast<cd>() * std::exp(-std::sqrt(1.0 + x * x));
    }
    return u;
}

} // namespace

TEST_CASE("rate function tau: positivity, cap, and refinement stability") {
    HermiteTruncation trunc(10);
    Grid grid(GridSpec{-8.0, 8.0, 32});
    const cd z(-1.0, 0.0);

    const TauParts tp = tau_parts(z, trunc, grid);
    CHECK(tp.value > 0.0);
    CHECK(tp.n_vdv > 0.0);
    CHECK(tp.n_vx > 0.0);
    CHECK(tp.n_r0 > 0.0);
    // Minimum structure: both branches of the min are honored.
    CHECK(tp.value * (tp.n_vdv + tp.n_vx + tp.n_r0) <= 1.0 + 1e-12);
    CHECK(tp.value * tp.value * tp.n_r0 <= 1.0 + 1e-12);
    CHECK(tp.value <= std::pow(tp.n_r0, -0.5) + 1e-12);
    // At z = -1 the distance to the spectrum is 1, so the resolvent norm is 1.
    CHECK(tp.n_r0 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(tp.value == doctest::Approx(0.327789).epsilon(1e-4));
    CHECK(tau(z, trunc, grid) == doctest::Approx(tp.value).epsilon(1e-14));

    SUBCASE("value reproducible under refinement") {
        HermiteTruncation t14(14);
        Grid g48(GridSpec{-8.0, 8.0, 48});
        HermiteTruncation t16(16);
        Grid g64(GridSpec{-8.0, 8.0, 64});
        const double tau_a = tau(z, t14, g48);
        const double tau_b = tau(z, t16, g64);
        CHECK(std::abs(tau_a - tau_b) <= 1e-3); // measured 2.7e-4
    }

    SUBCASE("near-spectrum refusal") {
        CHECK_THROWS_AS((void)tau(cd(0.5, 0.0), trunc, grid), ValidationError);
        CHECK_THROWS_AS((void)tau(cd(0.5, 5e-5), trunc, grid), ValidationError);
        CHECK_THROWS_AS((void)tau(cd(-5e-5, 0.0), trunc, grid), ValidationError);
        CHECK_NOTHROW((void)tau_parts(cd(0.5, 2e-4), trunc, grid));
    }
}

TEST_CASE("plateau cutoff is an exact monotone smoothstep") {
    // Identity below 1, level 3/2 above 2.
    for (double s : {0.0, 0.25, 0.7, 1.0}) CHECK(chi_plateau(s) == doctest::Approx(s).epsilon(1e-15));
    for (double s : {2.0, 3.0, 10.0}) CHECK(chi_plateau(s) == doctest::Approx(1.5).epsilon(1e-15));
    // C^2 joints of the interpolant.
    CHECK(chi_plateau_d1(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(chi_plateau_d1(2.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(chi_plateau_d2(1.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(chi_plateau_d2(2.0) == doctest::Approx(0.0).epsilon(1e-12));
    // Monotone on the joining interval and derivative consistent with a
    // central difference.
    double prev = chi_plateau(1.0);
    for (int k = 1; k <= 20; ++k) {
        const double s = 1.0 + 0.05 * k;
        const double cur = chi_plateau(s);
        CHECK(cur >= prev - 1e-15);
        const double fd = (chi_plateau(s + 1e-6) - chi_plateau(s - 1e-6)) / 2e-6;
        CHECK(chi_plateau_d1(s) == doctest::Approx(fd).epsilon(1e-6));
        prev = cur;
    }
    // Curvature is bounded by its midpoint value 3/2 in magnitude.
    for (int k = 0; k <= 40; ++k) {
        const double s = 0.5 + 0.05 * k;
        CHECK(std::abs(chi_plateau_d2(s)) <= 1.5 + 1e-12);
    }
}

TEST_CASE("conjugation margin is small, r-stable, and Neumann-consistent") {
    HermiteTruncation trunc(10);
    Grid grid(GridSpec{-8.0, 8.0, 32});
    const cd z(-1.0, 0.0);
    const double c0 = 0.05;

    // Margin well below 1 across the dilation ladder (measured values).
    const double m1 = conjugation_check(z, c0, 1.0, trunc, grid);
    const double m2 = conjugation_check(z, c0, 2.0, trunc, grid);
    const double m4 = conjugation_check(z, c0, 4.0, trunc, grid);
    const double m8 = conjugation_check(z, c0, 8.0, trunc, grid);
    CHECK(m1 == doctest::Approx(0.053471).epsilon(1e-3));
    CHECK(m2 == doctest::Approx(0.048865).epsilon(1e-3));
    CHECK(m4 == doctest::Approx(0.052922).epsilon(1e-3));
    CHECK(m8 == doctest::Approx(0.057602).epsilon(1e-3));
    for (double m : {m1, m2, m4, m8}) {
        CHECK(m < 1.0);
        CHECK(m < 0.1);
    }
    // Uniformity in r: bounded spread over the ladder and stability at the
    // window limit (measured spread 1.18, limit ratio 1.002).
    const double lo = std::min(std::min(m1, m2), std::min(m4, m8));
    const double hi = std::max(std::max(m1, m2), std::max(m4, m8));
    CHECK(hi / lo < 1.25);
    const double m79 = conjugation_check(z, c0, 7.9, trunc, grid);
    CHECK(m79 / m8 > 0.9);
    CHECK(m79 / m8 < 1.1);

    SUBCASE("zero coupling gives exactly zero margin") {
        CHECK(conjugation_check(z, 0.0, 2.0, trunc, grid) == 0.0);
    }

    SUBCASE("validation") {
        CHECK_THROWS_AS((void)conjugation_check(z, c0, 0.5, trunc, grid), ValidationError);
        CHECK_THROWS_AS((void)conjugation_check(z, -0.1, 2.0, trunc, grid), ValidationError);
        // r beyond what the grid window can support overflows the cutoff.
        CHECK_THROWS_AS((void)conjugation_check(z, c0, 20.0, trunc, grid), ValidationError);
    }

    SUBCASE("margin < 1 certifies the conjugated inverse via Neumann") {
        const double a = c0 * tau(z, trunc, grid);
        const MatrixXcd Q = conjugation_generator(a, 2.0, trunc, grid).cast<cd>();
        const MatrixXcd P0 = assemble_free(trunc, grid);
        const int n = static_cast<int>(P0.rows());
        const MatrixXcd A = P0 + Q - z * MatrixXcd::Identity(n, n);
        const double inv_norm = 1.0 / smallest_singular(A).sigma;
        const TauParts tp = tau_parts(z, trunc, grid);
        CHECK(inv_norm <= tp.n_r0 / (1.0 - m2) + 1e-9);
        CHECK(inv_norm == doctest::Approx(1.0033).epsilon(1e-2));
    }
}

TEST_CASE("decay fit recovers the synthetic rate and flags flat tails") {
    HermiteTruncation trunc(24);
    Grid grid(GridSpec{-8.0, 8.0, 32});
    const MatrixXcd u = synthetic_decaying_state(trunc, grid);

    const DecayReport rep = decay_fit(u, grid, trunc);
    CHECK(rep.fitted_rate == doctest::Approx(1.0).epsilon(0.05)); // measured 0.9979
    CHECK(rep.fit_quality > 0.95);                                // measured 0.9921
    CHECK(rep.shells_used >= 30);
    CHECK_FALSE(rep.non_decaying);
    CHECK(rep.flags.empty());
    CHECK(rep.fitted_rate >= 0.0);
    CHECK(static_cast<int>(rep.shell_phase.size()) == rep.shells_used);
    CHECK(rep.shell_logmax.size() == rep.shell_phase.size());

    SUBCASE("scale invariance") {
        const DecayReport rep2 = decay_fit(2.0 * u, grid, trunc);
        CHECK(rep2.fitted_rate == doctest::Approx(rep.fitted_rate).epsilon(1e-12));
        CHECK(rep2.fit_quality == doctest::Approx(rep.fit_quality).epsilon(1e-12));
    }

    SUBCASE("constant tail is flagged non-decaying") {
        HermiteTruncation t32(32);
        MatrixXcd uc = MatrixXcd::Zero(32, grid.size());
        uc.row(0).setOnes();
        const DecayReport rc = decay_fit(uc, grid, t32);
        CHECK(rc.fitted_rate < 0.02); // measured 0.011
        CHECK(rc.non_decaying);
        CHECK(rc.flags.find("non_decaying") != std::string::npos);
    }

    SUBCASE("insufficient dynamic range is a numerical error") {
        // Mass at the window edge (beyond the largest interior phase shell)
        // plus an interior component below the 1e-12 amplitude floor.
        MatrixXcd ue = MatrixXcd::Zero(trunc.N, grid.size());
        ue(0, 0) = 1.0;                    // x = -8, the outermost node
        ue(0, grid.size() / 2) = 1e-13;    // x = 0, below the floor once scaled
        CHECK_THROWS_AS((void)decay_fit(ue, grid, trunc), NumericalError);
    }

    SUBCASE("validation") {
        MatrixXcd wrong = MatrixXcd::Zero(trunc.N + 1, grid.size());
        wrong(0, 0) = 1.0;
        CHECK_THROWS_AS((void)decay_fit(wrong, grid, trunc), ValidationError);
        const MatrixXcd zero = MatrixXcd::Zero(trunc.N, grid.size());
        CHECK_THROWS_AS((void)decay_fit(zero, grid, trunc), ValidationError);
    }
}

TEST_CASE("manufactured eigenpair flows through solver, tau, and fit") {
    // Plant an exact eigenpair with a decaying eigenvector into the coupled
    // operator by a rank-one correction, then verify the whole diagnostic
    // chain on the *computed* pair.
    const int M = 32, N = 24;
    HermiteTruncation trunc(N);
    Grid grid(GridSpec{-8.0, 8.0, M});
    Potential pot = Potential::make("gaussian_bump", 0.4, 1.0, grid);
    const MatrixXcd P = assemble_full(trunc, grid, pot);

    VectorXcd uf = flatten(synthetic_decaying_state(trunc, grid));
    uf /= uf.norm();
    const cd zs(-0.7, 0.0);
    const MatrixXcd Pt = P - (P * uf - zs * uf) * uf.adjoint();
    REQUIRE((Pt * uf - zs * uf).norm() < 1e-12);

    const auto pairs = discrete_spectrum(Pt, zs, 0.3);
    REQUIRE(pairs.size() == 1);
    const auto& pr = pairs.front();
    CHECK(std::abs(pr.value - zs) < 1e-8);
    CHECK(std::abs(pr.vector.normalized().dot(uf)) > 0.999);

    const MatrixXcd ue = unflatten(pr.vector, N, M);
    const DecayReport rep = decay_fit(ue, grid, trunc);
    const double t = tau(pr.value, trunc, grid);
    CHECK(t == doctest::Approx(0.2390).epsilon(1e-2));
    // The fitted rate clears the guaranteed fraction of the conjugation rate
    // by a wide margin, and matches the planted unit rate.
    CHECK(rep.fitted_rate >= 0.5 * 0.05 * t);
    CHECK(rep.fitted_rate == doctest::Approx(1.0).epsilon(0.05));
    CHECK(rep.fit_quality > 0.95);
}

TEST_CASE("moment growth separates decaying states from heavy tails") {
    HermiteTruncation trunc(10);
    Grid grid(GridSpec{-8.0, 8.0, 32});

    SUBCASE("Gaussian-type state: finite moments, interior-dominated") {
        const MatrixXcd u = synthetic_decaying_state(trunc, grid);
        const auto tbl = moment_growth(u, grid, trunc, {0.3, 0.8, 2.0});
        REQUIRE(tbl.size() == 3);
        CHECK(tbl[0].norm == doctest::Approx(0.657476).epsilon(1e-3));
        CHECK(tbl[1].norm == doctest::Approx(1.026337).epsilon(1e-3));
        CHECK(tbl[2].norm == doctest::Approx(3.268344).epsilon(1e-3));
        for (const auto& row : tbl) {
            CHECK(std::isfinite(row.norm));
            CHECK(row.boundary_fraction < 1e-3);
            CHECK_FALSE(row.window_dominated);
        }
        CHECK(tbl[2].norm / tbl[0].norm < 6.0); // bounded growth across s
    }

    SUBCASE("inverse-bracket tail: moments creep up with the window beyond s=1/2") {
        auto tail_norm = [&](int M2, double s) {
            Grid g2(GridSpec{-M2 / 4.0, M2 / 4.0, M2}); // fixed step h = 0.5
            MatrixXcd u2 = MatrixXcd::Zero(trunc.N, M2);
            for (int i = 0; i < M2; ++i) {
                const double x = g2.nodes()(i);
                u2(0, i) = 1.0 / std::sqrt(1.0 + x * x);
            }
            return moment_growth(u2, g2, trunc, {s}).front().norm;
        };
        const double r03 = tail_norm(64, 0.3) / tail_norm(32, 0.3);
        const double r08 = tail_norm(64, 0.8) / tail_norm(32, 0.8);
        CHECK(r03 < 1.10);        // convergent moment: measured 1.048
        CHECK(r08 > 1.12);        // divergent trend: measured 1.167
        CHECK(r08 > r03 + 0.05);  // the contrast itself
    }

    SUBCASE("boundary-dominated weight is flagged") {
        HermiteTruncation t16(16);
        MatrixXcd ub = MatrixXcd::Zero(16, grid.size());
        for (int i = 0; i < grid.size(); ++i) ub(0, i) = std::exp(std::abs(grid.nodes()(i)));
        const auto tbl = moment_growth(ub, grid, t16, {0.5, 2.0});
        for (const auto& row : tbl) {
            CHECK(row.boundary_fraction > 0.5);
            CHECK(row.window_dominated);
        }
    }

    SUBCASE("validation") {
        const MatrixXcd u = synthetic_decaying_state(trunc, grid);
        CHECK_THROWS_AS((void)moment_growth(u, grid, trunc, {0.8, 0.3}), ValidationError);
        CHECK_THROWS_AS(
            (void)moment_growth(u, grid, trunc, {0.3, std::numeric_limits<double>::infinity()}),
            ValidationError);
        MatrixXcd wrong = MatrixXcd::Zero(trunc.N, grid.size() + 1);
        CHECK_THROWS_AS((void)moment_growth(wrong, grid, trunc, {0.5}), ValidationError);
    }
}

TEST_CASE("embedded-candidate diagnostics stay interior") {
    // Reconstruct the manufactured spectral crossing, classify it, and check
    // that the candidate state's moments are interior-dominated.  The profile
    // decays slowly, so higher moments lean more on the window edge — the
    // fractions grow with the order — but no moment is edge-dominated.
    const int M = 48, N = 12;
    HermiteTruncation trunc(N);
    Grid grid(GridSpec{-6.0, 6.0, M});
    const CutoffSpec cutoff(1, 1.5, 2.0, 2.5);
    const double g_star = -0.68032790, lam_star = 0.1928687212;
    Potential pot = Potential::make("gaussian_bump", g_star, 1.0, grid);

    ClassifyParams cp;
    cp.detection_threshold = 2e-3;
    const Classification cl = classify(trunc, grid, cutoff, pot, lam_star, cp);
    REQUIRE(cl.null_vector.size() == N * M);

    const MatrixXcd uc = unflatten(cl.null_vector, N, M);
    const auto tbl = moment_growth(uc, grid, trunc, {0.5, 1.0, 2.0});
    REQUIRE(tbl.size() == 3);
    for (const auto& row : tbl) {
        CHECK(std::isfinite(row.norm));
        CHECK(row.boundary_fraction < 0.5);
        CHECK_FALSE(row.window_dominated);
    }
    CHECK(tbl[0].boundary_fraction == doctest::Approx(0.087931).epsilon(0.2));
    CHECK(tbl[1].boundary_fraction == doctest::Approx(0.145267).epsilon(0.2));
    CHECK(tbl[2].boundary_fraction == doctest::Approx(0.280986).epsilon(0.2));
    CHECK(tbl[0].boundary_fraction < tbl[1].boundary_fraction);
    CHECK(tbl[1].boundary_fraction < tbl[2].boundary_fraction);
}
