#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kfp/errors.hpp"
#include "kfp/fullop.hpp"
#include "kfp/linalg.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

using namespace kfp;
using cd = std::complex<double>;

namespace {

// Inner product matching state_norm: h * <flatten(a), flatten(b)>.
cd state_dot(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, const Grid& g) {
    return g.step() * flatten(a).dot(flatten(b));
}

Eigen::MatrixXcd random_state(int N, int M, unsigned seed) {
    return unflatten(seeded_vector(N * M, seed), N, M);
}

// Smooth random state: frequency- and mode-damped.
Eigen::MatrixXcd smooth_state(const Grid& g, int N, unsigned seed) {
    Eigen::MatrixXcd hat = unflatten(seeded_vector(N * g.size(), seed), N, g.size());
    for (int m = 0; m < g.size(); ++m) {
        const double xi = g.frequencies()[m];
        for (int j = 0; j < N; ++j) hat(j, m) *= std::exp(-xi * xi / 8.0 - j / 2.0);
    }
    return g.from_freq(hat);
}

} // namespace

TEST_CASE("grid transforms invert each other and resolve plane waves") {
    Grid g(GridSpec{-10.0, 14.0, 48});
    CHECK(g.step() == doctest::Approx(0.5));
    CHECK(g.nodes()[0] == doctest::Approx(-10.0));
    CHECK(g.frequencies()[24] == doctest::Approx(0.0)); // m = 0 at the middle slot

    // Round trip on a random state.
    Eigen::MatrixXcd s = random_state(3, 48, 11);
    Eigen::MatrixXcd r = g.from_freq(g.to_freq(s));
    CHECK((r - s).norm() <= 1e-12 * s.norm());

    // A pure plane wave at a grid frequency transforms to a single line.
    const double xi5 = g.frequencies()[24 + 5];
    Eigen::MatrixXcd wave(1, 48);
    for (int i = 0; i < 48; ++i) wave(0, i) = std::exp(cd(0.0, xi5 * g.nodes()[i]));
    Eigen::MatrixXcd hat = g.to_freq(wave);
    for (int m = 0; m < 48; ++m) {
        const double expected = (m == 24 + 5) ? g.length() : 0.0;
        CHECK(std::abs(hat(0, m) - expected) <= 1e-10 * g.length());
    }
}

TEST_CASE("grid validation rejects bad windows") {
    CHECK_THROWS_AS(Grid(GridSpec{1.0, 2.0, 32}), ValidationError);  // origin outside
    CHECK_THROWS_AS(Grid(GridSpec{-1.0, 1.0, 8}), ValidationError);  // too few nodes
    CHECK_THROWS_AS(Grid(GridSpec{-1.0, 1.0, 33}), ValidationError); // odd count
}

TEST_CASE("spectral derivative is exact on band-limited data, fd2 is second order") {
    Grid g(GridSpec{-M_PI, M_PI, 64});
    const double k = 4.0 * (2.0 * M_PI / g.length()); // 4th harmonic
    Eigen::VectorXcd f(64), df(64);
    for (int i = 0; i < 64; ++i) {
        f[i] = std::sin(k * g.nodes()[i]);
        df[i] = k * std::cos(k * g.nodes()[i]);
    }
    Eigen::VectorXcd ds = g.derivative_spectral() * f;
    CHECK((ds - df).norm() <= 1e-11 * df.norm());

    auto fd_err = [&](int M) {
        Grid gg(GridSpec{-M_PI, M_PI, M});
        Eigen::VectorXcd ff(M), dd(M);
        for (int i = 0; i < M; ++i) {
            ff[i] = std::sin(k * gg.nodes()[i]);
            dd[i] = k * std::cos(k * gg.nodes()[i]);
        }
        return ((gg.derivative_fd() * ff) - dd).norm() / dd.norm();
    };
    const double e1 = fd_err(64), e2 = fd_err(128);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("flatten layout matches the kron convention") {
    const int N = 3, M = 16;
    Grid g(GridSpec{-4.0, 4.0, M});
    Eigen::MatrixXcd X = unflatten(seeded_vector(M * M, 5), M, M);
    Eigen::MatrixXcd A = unflatten(seeded_vector(N * N, 6), N, N);
    Eigen::MatrixXcd S = random_state(N, M, 7);
    Eigen::VectorXcd lhs = kron_xv(X, A) * flatten(S);
    Eigen::VectorXcd rhs = flatten((A * S * X.transpose()).eval());
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("fourier multiplier matrix agrees with direct application") {
    const int N = 4;
    Grid g(GridSpec{-6.0, 6.0, 24});
    auto mult = [&](double xi) -> Eigen::MatrixXcd {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(N, N);
        for (int j = 0; j < N; ++j) A(j, j) = 1.0 / (1.0 + xi * xi + j);
        A(0, N - 1) = cd(0.1, 0.2) * xi;
        return A;
    };
    Eigen::MatrixXcd T = fourier_multiplier_matrix(g, N, mult);
    Eigen::MatrixXcd s = random_state(N, 24, 9);
    Eigen::VectorXcd via_matrix = T * flatten(s);
    Eigen::VectorXcd via_apply = flatten(apply_fourier_multiplier(s, g, mult));
    CHECK((via_matrix - via_apply).norm() <= 1e-11 * via_apply.norm());
}

TEST_CASE("potential families: values, derivatives, admissibility constant") {
    Grid g(GridSpec{-20.0, 20.0, 64});
    Potential p = Potential::make("power_law", 2.0, 1.5, g);
    for (int i : {0, 10, 32, 50}) {
        const double x = g.nodes()[i];
        CHECK(p.values()[i] == doctest::Approx(2.0 * std::pow(1.0 + x * x, -0.75)));
        // Finite-difference check of the supplied derivative.
        const double d = 1e-6;
        const double num =
            (2.0 * std::pow(1.0 + (x + d) * (x + d), -0.75) -
             2.0 * std::pow(1.0 + (x - d) * (x - d), -0.75)) /
            (2.0 * d);
        CHECK(p.derivative()[i] == doctest::Approx(num).epsilon(1e-6));
    }
    // |V| + <x>|V'| <= C <x>^{-rho}: C is between g and g(1 + rho).
    CHECK(p.admissibility_constant() >= 2.0);
    CHECK(p.admissibility_constant() <= 2.0 * (1.0 + 1.5) + 1e-9);

    Potential b = Potential::make("gaussian_bump", -0.3, 0.0, g);
    CHECK(b.values()[32] == doctest::Approx(-0.3 * std::exp(-g.nodes()[32] * g.nodes()[32])));
    CHECK_THROWS_AS(Potential::make("power_law", 1.0, -0.5, g), ValidationError);
    CHECK_THROWS_AS(Potential::make("yukawa", 1.0, 1.0, g), ValidationError);
}

TEST_CASE("sampled potential round-trips through a file and validates") {
    Grid g(GridSpec{-8.0, 8.0, 32});
    Potential p = Potential::make("power_law", 0.7, 1.0, g);
    const char* path = "sampled_potential_test.csv";
    {
        std::ofstream out(path);
        out << "# x, V, V'\n";
        char buf[128];
        for (int i = 0; i < 32; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.nodes()[i], p.values()[i],
                          p.derivative()[i]);
            out << buf;
        }
    }
    Potential q = Potential::from_file(path, 1.0, g);
    CHECK((q.values() - p.values()).norm() <= 1e-14);
    CHECK((q.derivative() - p.derivative()).norm() <= 1e-14);
    CHECK(q.admissibility_constant() == doctest::Approx(p.admissibility_constant()));

    // Wrong grid: node mismatch must be rejected.
    Grid g2(GridSpec{-8.0, 8.0, 64});
    CHECK_THROWS_AS(Potential::from_file(path, 1.0, g2), ValidationError);
    std::remove(path);
    CHECK_THROWS_AS(Potential::from_file(path, 1.0, g), ValidationError);
}

TEST_CASE("free operator is accretive and parity-symmetric") {
    HermiteTruncation trunc(8);
    Grid g(GridSpec{-8.0, 8.0, 32});
    Eigen::MatrixXcd P0 = assemble_free(trunc, g);
    Eigen::MatrixXcd J = parity_matrix(trunc, g);

    CHECK((J * J - Eigen::MatrixXcd::Identity(J.rows(), J.cols())).norm() == 0.0);
    // Adjoint through parity: P0^* = J P0 J.
    CHECK((P0.adjoint() - J * P0 * J).norm() <= 1e-10 * P0.norm());

    for (int k = 0; k < 100; ++k) {
        Eigen::MatrixXcd u = random_state(8, 32, 100 + k);
        const cd q = state_dot(u, unflatten(P0 * flatten(u), 8, 32), g);
        CHECK(q.real() >= -1e-8 * std::norm(state_norm(u, g)));
    }
}

TEST_CASE("full operator keeps accretivity with a long-range potential") {
    HermiteTruncation trunc(8);
    Grid g(GridSpec{-10.0, 10.0, 32});
    Potential pot = Potential::make("power_law", 0.4, 1.0, g);
    Eigen::MatrixXcd P = assemble_full(trunc, g, pot);
    // The coupling block is skew-adjoint, so the real part is untouched.
    Eigen::MatrixXcd W = coupling_block(trunc, g, pot);
    CHECK((W + W.adjoint()).norm() <= 1e-12 * W.norm());
    for (int k = 0; k < 50; ++k) {
        Eigen::MatrixXcd u = random_state(8, 32, 300 + k);
        const cd q = state_dot(u, unflatten(P * flatten(u), 8, 32), g);
        CHECK(q.real() >= -1e-8 * std::norm(state_norm(u, g)));
    }
    // Zero coupling gives back the free operator.
    Potential z = Potential::make("gaussian_bump", 0.0, 0.0, g);
    CHECK(coupling_block(trunc, g, z).norm() == 0.0);
}

TEST_CASE("resolvent symmetry under conjugation and parity") {
    HermiteTruncation trunc(6);
    Grid g(GridSpec{-6.0, 6.0, 24});
    Eigen::MatrixXcd P0 = assemble_free(trunc, g);
    const Eigen::Index n = P0.rows();
    const cd z(-1.0, 1.0);
    Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd Rz = (P0 - z * I).partialPivLu().solve(I);
    Eigen::MatrixXcd Rzbar = (P0 - std::conj(z) * I).partialPivLu().solve(I);
    Eigen::MatrixXcd J = parity_matrix(trunc, g);
    CHECK((Rzbar.adjoint() - J * Rz * J).norm() <= 1e-8 * Rz.norm());
}

TEST_CASE("discrete spectrum of the free operator sits on threshold lattice points") {
    // Integer frequencies: fiber energies l + m^2.  Unresolved high-|m| fibers
    // keep Re >= 0 and stay several units away from 0 and 1 at this N.
    HermiteTruncation trunc(24);
    Grid g(GridSpec{-M_PI, M_PI, 32});
    Eigen::MatrixXcd P0 = assemble_free(trunc, g);

    auto near0 = discrete_spectrum(P0, cd(0.0, 0.0), 0.5);
    REQUIRE(near0.size() == 1); // only (l=0, m=0)
    CHECK(std::abs(near0[0].value) <= 1e-9);
    CHECK(near0[0].residual <= 1e-9 * operator_norm(P0));

    // Near 1: (l=1, m=0) and (l=0, m=+-1).
    auto near1 = discrete_spectrum(P0, cd(1.0, 0.0), 0.3);
    REQUIRE(near1.size() == 3);
    for (const auto& ep : near1) CHECK(std::abs(ep.value - 1.0) <= 1e-8);

    // Krylov path finds the same cluster.
    auto krylov = discrete_spectrum(P0, cd(1.0, 0.1), 0.35, /*dense_cap=*/1, 12);
    REQUIRE(krylov.size() >= 3);
    int hits = 0;
    for (const auto& ep : krylov)
        if (std::abs(ep.value - 1.0) <= 1e-6) ++hits;
    CHECK(hits == 3);
}

TEST_CASE("weighted norms: composition order, parity of r, monotonicity") {
    HermiteTruncation trunc(10);
    Grid g(GridSpec{-12.0, 12.0, 40});
    Eigen::MatrixXcd u = smooth_state(g, 10, 42);

    // r = 0: both families reduce to the <x>^s multiplier.
    WeightOperator h0(WeightSpec{"H", 0.0, 0.7}, trunc, g);
    WeightOperator g0(WeightSpec{"G", 0.0, 0.7}, trunc, g);
    CHECK((h0.apply(u) - g0.apply(u)).norm() <= 1e-13 * u.norm());
    Eigen::MatrixXcd direct = u * g.bracket_pow(0.7).asDiagonal();
    CHECK((g0.apply(u) - direct).norm() <= 1e-13 * direct.norm());

    // G-type with r = 2 equals one application of the velocity block.
    WeightOperator g2(WeightSpec{"G", 2.0, 0.0}, trunc, g);
    Eigen::MatrixXd ladder = Eigen::MatrixXd::Zero(10, 10);
    for (int j = 0; j < 10; ++j) ladder(j, j) = j;
    Eigen::MatrixXd lam = ladder + 1.5 * Eigen::MatrixXd::Identity(10, 10) +
                          0.75 * trunc.v_matrix() * trunc.v_matrix();
    Eigen::MatrixXcd ref = lam.cast<cd>() * u;
    CHECK((g2.apply(u) - ref).norm() <= 1e-12 * ref.norm());

    // Fractional r only for G; odd r rejected for H.
    CHECK_NOTHROW(WeightOperator(WeightSpec{"G", 1.3, 0.0}, trunc, g));
    CHECK_THROWS_AS(WeightOperator(WeightSpec{"H", 1.0, 0.0}, trunc, g), ValidationError);
    CHECK_THROWS_AS(WeightOperator(WeightSpec{"Q", 2.0, 0.0}, trunc, g), ValidationError);

    // G-type r = -2 inverts r = 2.
    WeightOperator gm2(WeightSpec{"G", -2.0, 0.0}, trunc, g);
    CHECK((gm2.apply(g2.apply(u)) - u).norm() <= 1e-11 * u.norm());
    // H-type r = -2 inverts r = 2 as well (frequency-shifted block).
    WeightOperator h2(WeightSpec{"H", 2.0, 0.0}, trunc, g);
    WeightOperator hm2(WeightSpec{"H", -2.0, 0.0}, trunc, g);
    CHECK((hm2.apply(h2.apply(u)) - u).norm() <= 1e-11 * u.norm());

    // Norm grows with s.
    WeightOperator s1(WeightSpec{"G", 0.0, 0.3}, trunc, g);
    WeightOperator s2(WeightSpec{"G", 0.0, 0.9}, trunc, g);
    CHECK(s1.norm(u) <= s2.norm(u));
    CHECK(s2.norm(u) >= state_norm(u, g)); // s >= 0 weights are >= 1
}

TEST_CASE("H-type weight dominates the G-type at equal (r, s)") {
    HermiteTruncation trunc(8);
    Grid g(GridSpec{-8.0, 8.0, 32});
    Eigen::MatrixXcd u = smooth_state(g, 8, 77);
    WeightOperator wh(WeightSpec{"H", 2.0, 0.4}, trunc, g);
    WeightOperator wg(WeightSpec{"G", 2.0, 0.4}, trunc, g);
    // H adds 1 + <D_x>^{2/3} >= 2 to the same positive block.
    CHECK(wh.norm(u) >= wg.norm(u));
}

TEST_CASE("coupling smoothed by the free resolvent is strongly compressible") {
    HermiteTruncation trunc(8);
    Grid g(GridSpec{-16.0, 16.0, 48});
    Potential pot = Potential::make("power_law", 0.2, 1.0, g);
    Eigen::MatrixXcd P0 = assemble_free(trunc, g);
    const Eigen::Index n = P0.rows();
    Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd R0 = (P0 + I).partialPivLu().solve(I);
    Eigen::MatrixXcd K = coupling_block(trunc, g, pot) * R0;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(K);
    const auto& sv = svd.singularValues();
    CHECK(sv(0) > 0.0);
    // Compact-operator fingerprint: the singular spectrum collapses through
    // steady decay (median two orders down) all the way below 1e-6.
    CHECK(sv(n / 2) <= 0.05 * sv(0));
    CHECK(sv(n - 1) <= 1e-6 * sv(0));
}

TEST_CASE("weight-conjugated free resolvent stays bounded") {
    // Note the bound is for a fixed window: transport through the periodic
    // seam sees the full <x>^k weight jump, so the conjugated norm is not
    // window-uniform for k = 2 (measured ~15 here, growing roughly linearly
    // with the window).  The windowed-kernel machinery downstream never
    // crosses the seam, which is where the continuum bound actually matters.
    HermiteTruncation trunc(8);
    Grid g(GridSpec{-12.0, 12.0, 80});
    Eigen::MatrixXcd P0 = assemble_free(trunc, g);
    const Eigen::Index n = P0.rows();
    Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd R0 = (P0 + I).partialPivLu().solve(I);
    CHECK(operator_norm(R0) <= 1.0 + 1e-9); // accretive: ||(P0+1)^{-1}|| <= 1
    const double caps[2] = {4.0, 25.0};
    for (int t = 0; t < 2; ++t) {
        const double k = t + 1.0;
        Eigen::VectorXd wk = g.bracket_pow(k);
        Eigen::VectorXcd wplus(n), wminus(n);
        for (int i = 0; i < g.size(); ++i)
            for (int j = 0; j < trunc.N; ++j) {
                wplus[static_cast<Eigen::Index>(i) * trunc.N + j] = wk[i];
                wminus[static_cast<Eigen::Index>(i) * trunc.N + j] = 1.0 / wk[i];
            }
        Eigen::MatrixXcd C = wplus.asDiagonal() * R0 * wminus.asDiagonal();
        CHECK(operator_norm(C) <= caps[t]);
    }
}

TEST_CASE("maximal-regularity ratio is order one on smooth states") {
    HermiteTruncation trunc(12);
    Grid g(GridSpec{-10.0, 10.0, 40});
    auto rep = subelliptic_constant(trunc, g, 40, 555);
    REQUIRE(rep.ratios.size() == 40);
    CHECK(rep.constant > 0.3);
    CHECK(rep.constant < 50.0);
    // Deterministic: same seed reproduces the same constant bitwise.
    auto rep2 = subelliptic_constant(trunc, g, 40, 555);
    CHECK(rep.constant == rep2.constant);
}
