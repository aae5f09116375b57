#include "kfp/semigroup.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kfp/errors.hpp"
#include "kfp/fullop.hpp"
#include "kfp/linalg.hpp"

namespace kfp {

namespace {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

void check_time(double t) {
    if (!(t >= 0.0) || !(t <= kEvolveTMax))
        throw ValidationError("evolve: t must lie in [0, 10]");
}

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr double kGaussNodes[8] = {-0.9602898564975363, -0.7966664774136267,
                                   -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
constexpr double kGaussWeights[8] = {0.1012285362903763, 0.2223810344533745,
                                     0.3137066458778873, 0.3626837833783620,
                                     0.3626837833783620, 0.3137066458778873,
                                     0.2223810344533745, 0.1012285362903763};

} // namespace

void validate_plan(const EvolutionPlan& plan) {
    for (size_t i = 0; i < plan.times.size(); ++i) {
        const double t = plan.times[i];
        if (!(t >= 0.0) || !(t <= kEvolveTMax))
            throw ValidationError("evolution plan: times must lie in [0, 10]");
        if (i > 0 && !(t > plan.times[i - 1]))
            throw ValidationError("evolution plan: times must be increasing");
    }
    for (double xi : plan.xi_grid)
        if (!std::isfinite(xi)) throw ValidationError("evolution plan: xi_grid must be finite");
}

Eigen::MatrixXcd fiber_evolution(double t, double xi, const HermiteTruncation& trunc,
                                 EvolutionPlan::Method method) {
    if (method == EvolutionPlan::Method::scaling_squaring) return fiber_semigroup(t, xi, trunc);
    if (t == 0.0) return MatrixXcd::Identity(trunc.N, trunc.N);
    const MatrixXcd A = assemble_fiber(xi, trunc).entries;
    Eigen::ComplexEigenSolver<MatrixXcd> es(A);
    if (es.info() != Eigen::Success)
        throw NumericalError("fiber_evolution: eigensolver failed on a fiber");
    VectorXcd ph(trunc.N);
    for (int j = 0; j < trunc.N; ++j) ph(j) = std::exp(-t * es.eigenvalues()(j));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().inverse();
}

std::vector<Eigen::MatrixXcd> evolve_many(double t, const std::vector<Eigen::MatrixXcd>& states,
                                          const HermiteTruncation& trunc, const Grid& grid,
                                          const EvolutionPlan& plan) {
    check_time(t);
    validate_plan(plan);
    const int N = trunc.N, M = grid.size();
    std::vector<MatrixXcd> hats;
    hats.reserve(states.size());
    for (const auto& u : states) {
        if (u.rows() != N || u.cols() != M)
            throw ValidationError("evolve: state must be modes x nodes for this truncation/grid");
        hats.push_back(grid.to_freq(u));
    }
    for (int m = 0; m < M; ++m) {
        const MatrixXcd E = fiber_evolution(t, grid.frequencies()(m), trunc, plan.method);
        for (auto& hat : hats) hat.col(m) = E * hat.col(m);
    }
    std::vector<MatrixXcd> out;
    out.reserve(hats.size());
    for (auto& hat : hats) out.push_back(grid.from_freq(hat));
    return out;
}

Eigen::MatrixXcd evolve(double t, const Eigen::MatrixXcd& state, const HermiteTruncation& trunc,
                        const Grid& grid, const EvolutionPlan& plan) {
    return evolve_many(t, {state}, trunc, grid, plan).front();
}

Eigen::MatrixXcd apply_observable(Observable obs, const Eigen::MatrixXcd& state,
                                  const HermiteTruncation& trunc, const Grid& grid) {
    switch (obs) {
        case Observable::v:
            return trunc.v_matrix().cast<cd>() * state;
        case Observable::dv:
            return trunc.dv_matrix().cast<cd>() * state;
        case Observable::x:
            return state * grid.nodes().cast<cd>().asDiagonal();
    }
    throw ValidationError("apply_observable: unknown observable");
}

Eigen::MatrixXcd apply_dx(const Eigen::MatrixXcd& state, const Grid& grid) {
    MatrixXcd hat = grid.to_freq(state);
    for (int m = 0; m < grid.size(); ++m) hat.col(m) *= cd(0.0, grid.frequencies()(m));
    return grid.from_freq(hat);
}

std::vector<Eigen::MatrixXcd> default_test_states(const HermiteTruncation& trunc,
                                                  const Grid& grid) {
    const int N = trunc.N, M = grid.size();
    const PointEval pe = phi_point_matrix(trunc, std::numeric_limits<double>::infinity());
    const struct {
        double v0, x0, sv, sx;
    } bumps[] = {{0.0, 0.0, 1.0, 1.0}, {0.7, -1.3, 0.8, 1.2}, {-0.4, 2.1, 1.2, 0.9}};

    std::vector<MatrixXcd> states;
    for (const auto& b : bumps) {
        VectorXd cj = VectorXd::Zero(N);
        for (int j = 0; j < N; ++j) {
            double acc = 0.0;
            for (size_t q = 0; q < pe.nodes.size(); ++q) {
                const double v = pe.nodes[q];
                acc += pe.weights[q] * std::exp(-(v - b.v0) * (v - b.v0) / (2.0 * b.sv * b.sv)) *
                       pe.values(q, j);
            }
            cj(j) = acc;
        }
        MatrixXcd u(N, M);
        for (int i = 0; i < M; ++i) {
            const double x = grid.nodes()(i);
            u.col(i) =
                cj.cast<cd>() * std::exp(-(x - b.x0) * (x - b.x0) / (2.0 * b.sx * b.sx));
        }
        states.push_back(u / state_norm(u, grid));
    }
    return states;
}

double commutation_check(double t, double s, Observable obs,
                         const std::vector<Eigen::MatrixXcd>& test_states,
                         const HermiteTruncation& trunc, const Grid& grid,
                         const EvolutionPlan& plan) {
    if (!(s >= 0.0) || !(s <= t)) throw ValidationError("commutation_check: need 0 <= s <= t");
    check_time(t);
    if (test_states.empty()) throw ValidationError("commutation_check: need test states");

    const double ch = std::cosh(s), sh = std::sinh(s);
    std::vector<MatrixXcd> rhs_args;
    rhs_args.reserve(test_states.size());
    for (const auto& u : test_states) {
        switch (obs) {
            case Observable::v:
                // v cosh s - 2 d_v sinh s + 2 (cosh s - 1) d_x
                rhs_args.push_back(ch * apply_observable(Observable::v, u, trunc, grid) -
                                   2.0 * sh * apply_observable(Observable::dv, u, trunc, grid) +
                                   2.0 * (ch - 1.0) * apply_dx(u, grid));
                break;
            case Observable::dv:
                // -1/2 (v sinh s - 2 d_v cosh s + 2 d_x sinh s)
                rhs_args.push_back(-0.5 *
                                   (sh * apply_observable(Observable::v, u, trunc, grid) -
                                    2.0 * ch * apply_observable(Observable::dv, u, trunc, grid) +
                                    2.0 * sh * apply_dx(u, grid)));
                break;
            case Observable::x:
                // x + v sinh s - 2 (cosh s - 1) d_v + 2 (sinh s - s) d_x
                rhs_args.push_back(apply_observable(Observable::x, u, trunc, grid) +
                                   sh * apply_observable(Observable::v, u, trunc, grid) -
                                   2.0 * (ch - 1.0) *
                                       apply_observable(Observable::dv, u, trunc, grid) +
                                   2.0 * (sh - s) * apply_dx(u, grid));
                break;
        }
    }

    const std::vector<MatrixXcd> inner = evolve_many(s, test_states, trunc, grid, plan);
    std::vector<MatrixXcd> lhs_args;
    lhs_args.reserve(inner.size());
    for (const auto& w : inner) lhs_args.push_back(apply_observable(obs, w, trunc, grid));
    const std::vector<MatrixXcd> lhs = evolve_many(t - s, lhs_args, trunc, grid, plan);
    const std::vector<MatrixXcd> rhs = evolve_many(t, rhs_args, trunc, grid, plan);

    double worst = 0.0;
    for (size_t i = 0; i < lhs.size(); ++i) {
        const double scale = std::max({lhs[i].norm(), rhs[i].norm(), 1e-300});
        worst = std::max(worst, (lhs[i] - rhs[i]).norm() / scale);
    }
    return worst;
}

double smoothing_integral(const std::function<double(double)>& theta, int k, double T,
                          const HermiteTruncation& trunc, const std::vector<double>& xi_grid,
                          int panels) {
    if (!(T > 3.0)) throw ValidationError("smoothing integral: T > 3 required");
    if (k < 0) throw ValidationError("smoothing integral: k >= 0 required");
    if (xi_grid.empty()) throw ValidationError("smoothing integral: xi_grid must be nonempty");
    if (panels < 2 || panels > 40)
        throw ValidationError("smoothing integral: panels must lie in [2, 40]");
    if (k >= 1) {
        // Certify theta^{(j)}(0) = 0 for j <= k: theta(eps) must shrink at
        // least like eps^{k + 1/2} near 0.
        for (double eps : {1e-2, 1e-3}) {
            if (!(std::abs(theta(eps)) <= std::pow(eps, k + 0.5)))
                throw ValidationError(
                    "smoothing integral: theta lacks the required vanishing order at 0");
        }
    }

    const int N = trunc.N;
    double worst = 0.0;
    for (double xi : xi_grid) {
        // Dyadic panels refined toward 0: [0, T 2^{1-panels}], then doubling.
        MatrixXcd B = MatrixXcd::Zero(N, N);
        double right = T;
        std::vector<std::pair<double, double>> edges;
        for (int p = 0; p < panels - 1; ++p) {
            const double left = T * std::ldexp(1.0, -(p + 1));
            edges.emplace_back(left, right);
            right = left;
        }
        edges.emplace_back(0.0, right);
        for (const auto& [a, b] : edges) {
            const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
            for (int q = 0; q < 8; ++q) {
                const double tq = mid + half * kGaussNodes[q];
                B += (half * kGaussWeights[q] * theta(tq)) * fiber_semigroup(tq, xi, trunc);
            }
        }
        const MatrixXcd A =
            assemble_fiber(xi, trunc).entries + MatrixXcd::Identity(N, N);
        MatrixXcd Ak = MatrixXcd::Identity(N, N);
        for (int j = 0; j < k + 1; ++j) Ak = A * Ak;
        worst = std::max(worst, operator_norm(Ak * B));
    }
    return worst;
}

double semigroup_power_norm(double t, double xi, int k, const HermiteTruncation& trunc) {
    if (!(t >= 0.0)) throw ValidationError("semigroup_power_norm: t >= 0 required");
    if (k < 0) throw ValidationError("semigroup_power_norm: k >= 0 required");
    const int N = trunc.N;
    const MatrixXcd A = assemble_fiber(xi, trunc).entries + MatrixXcd::Identity(N, N);
    MatrixXcd Ak = MatrixXcd::Identity(N, N);
    for (int j = 0; j < k; ++j) Ak = A * Ak;
    return operator_norm(Ak * fiber_semigroup(t, xi, trunc));
}

ProjectionSumBound projection_sum_bound(double t, double xi, int L,
                                        const HermiteTruncation& trunc) {
    if (!(t > 0.0)) throw ValidationError("projection sum: t > 0 required");
    if (L < 0 || 2 * L > trunc.N)
        throw ValidationError("projection sum: need 0 <= L <= N/2 for trustworthy projections");
    ProjectionSumBound out;
    for (int l = 0; l <= L; ++l)
        out.lhs += std::exp(-t * (l + xi * xi)) * operator_norm(riesz_projection(l, xi, trunc));
    const double expm1t = std::expm1(t);
    out.rhs = std::exp(-xi * xi * (t - 2.0 - 4.0 / expm1t)) / (1.0 - std::exp(-t));
    out.slack = out.rhs - out.lhs;
    return out;
}

} // namespace kfp
