#include "kfp/decay.hpp"

#include "kfp/errors.hpp"
#include "kfp/fullop.hpp"
#include "kfp/linalg.hpp"
#include "kfp/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace kfp {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double dist_to_ray(std::complex<double> z) {
    return z.real() >= 0.0 ? std::abs(z.imag()) : std::abs(z);
}

void check_off_spectrum(std::complex<double> z) {
    if (dist_to_ray(z) < 1e-4)
        throw ValidationError("decay rate: z must stay at least 1e-4 away from [0, infinity)");
}

// Largest node the truncation resolves; the conjugation cutoff must finish its
// transition inside both reaches.
double v_reach(const HermiteTruncation& trunc) {
    double m = 0.0;
    for (double v : trunc.quadrature_nodes) m = std::max(m, std::abs(v));
    return m;
}

} // namespace

// Quintic-ansatz smoothstep: identity below 1, plateau 3/2 above 2, and on
// [1, 2] the unique interpolant with matching value/slope/curvature at both
// ends, p(t) = 1 + t - t^3 + t^4/2 in t = s - 1 (the quintic coefficient
// vanishes).  p'(t) = (1 - t)^2 (1 + 2t) >= 0, so chi is monotone.
double chi_plateau(double s) {
    if (s <= 1.0) return s;
    if (s >= 2.0) return 1.5;
    const double t = s - 1.0;
    return 1.0 + t - t * t * t + 0.5 * t * t * t * t;
}

double chi_plateau_d1(double s) {
    if (s <= 1.0) return 1.0;
    if (s >= 2.0) return 0.0;
    const double t = s - 1.0;
    return (1.0 - t) * (1.0 - t) * (1.0 + 2.0 * t);
}

double chi_plateau_d2(double s) {
    if (s <= 1.0 || s >= 2.0) return 0.0;
    const double t = s - 1.0;
    return 6.0 * t * (t - 1.0);
}

TauParts tau_parts(std::complex<double> z, const HermiteTruncation& trunc, const Grid& grid) {
    check_off_spectrum(z);
    const MatrixXcd R0 = free_resolvent_offaxis(trunc, grid, z, 0.0);
    const int N = trunc.N;
    const int M = grid.size();

    // v d/dv on the mode side, identical in every x block.
    const MatrixXcd vdv =
        (trunc.v_matrix() * trunc.dv_matrix()).cast<std::complex<double>>();
    const MatrixXcd I_x = MatrixXcd::Identity(M, M);
    const MatrixXcd B_vdv = kron_xv(I_x, vdv);

    // v (x/<x>): diagonal on the node side, velocity ladder on the mode side.
    MatrixXcd X = MatrixXcd::Zero(M, M);
    for (int i = 0; i < M; ++i) {
        const double x = grid.nodes()(i);
        X(i, i) = x / std::sqrt(1.0 + x * x);
    }
    const MatrixXcd B_vx = kron_xv(X, trunc.v_matrix().cast<std::complex<double>>());

    TauParts parts;
    parts.n_vdv = operator_norm(B_vdv * R0);
    parts.n_vx = operator_norm(B_vx * R0);
    parts.n_r0 = operator_norm(R0);
    parts.value = std::min(1.0 / (parts.n_vdv + parts.n_vx + parts.n_r0),
                           1.0 / std::sqrt(parts.n_r0));
    return parts;
}

double tau(std::complex<double> z, const HermiteTruncation& trunc, const Grid& grid) {
    return tau_parts(z, trunc, grid).value;
}

Eigen::MatrixXd conjugation_generator(double a, double r, const HermiteTruncation& trunc,
                                      const Grid& grid) {
    if (!(r >= 1.0)) throw ValidationError("conjugation cutoff scale must satisfy r >= 1");
    const int N = trunc.N;
    const int M = grid.size();

    // Velocity-side pieces: multiplications by functions of v (and one d/dv).
    const auto chirp = [r](double s) { return chi_plateau_d1(s / r); };       // chi_r'
    const auto chirpp = [r](double s) { return chi_plateau_d2(s / r) / r; };  // chi_r''
    const MatrixXd M1 =
        mult_operator([&](double v) { return 4.0 * chirp(v * v) * v; }, trunc);
    const MatrixXd M2 = mult_operator(
        [&](double v) { return 2.0 * chirp(v * v) + 4.0 * v * v * chirpp(v * v); }, trunc);
    const MatrixXd M3 = mult_operator(
        [&](double v) {
            const double d = 2.0 * v * chirp(v * v);
            return d * d;
        },
        trunc);
    const MatrixXd Vblock = M1 * trunc.dv_matrix() + M2 - a * M3;

    MatrixXd Q = MatrixXd::Zero(M * N, M * N);
    const VectorXd x = grid.nodes();
    for (int i = 0; i < M; ++i) {
        const double bx = std::sqrt(1.0 + x(i) * x(i));
        const double g4 = chirp(bx) * x(i) / bx;
        Q.block(i * N, i * N, N, N) = a * (Vblock - g4 * trunc.v_matrix());
    }
    return Q;
}

double conjugation_check(std::complex<double> z, double c0, double r,
                         const HermiteTruncation& trunc, const Grid& grid) {
    if (!(r >= 1.0)) throw ValidationError("conjugation cutoff scale must satisfy r >= 1");
    if (!(c0 >= 0.0)) throw ValidationError("conjugation weight constant must satisfy c0 >= 0");
    const double x_reach = std::sqrt(1.0 + std::pow(grid.spec().x_max, 2));
    const double v2_reach = std::pow(v_reach(trunc), 2);
    if (r > x_reach || r > v2_reach) {
        std::ostringstream msg;
        msg << "conjugation cutoff scale r = " << r
            << " exceeds the resolved window (x reach " << x_reach << ", v^2 reach "
            << v2_reach << "): the weight would grow unchecked off the grid";
        throw ValidationError(msg.str());
    }
    if (c0 == 0.0) return 0.0;
    const double a = c0 * tau(z, trunc, grid);
    const MatrixXcd Q = conjugation_generator(a, r, trunc, grid).cast<std::complex<double>>();
    const MatrixXcd R0 = free_resolvent_offaxis(trunc, grid, z, 0.0);
    return operator_norm(Q * R0);
}

DecayReport decay_fit(const Eigen::MatrixXcd& u, const Grid& grid,
                      const HermiteTruncation& trunc) {
    const int N = trunc.N;
    const int M = grid.size();
    if (u.rows() != N || u.cols() != M)
        throw ValidationError("decay fit: state must be modes x nodes for this truncation/grid");
    const double nrm = state_norm(u, grid);
    if (!(nrm > 0.0)) throw ValidationError("decay fit: state must be nonzero");
    const MatrixXcd un = u / nrm;

    // Point cloud: |u| on grid nodes x quadrature nodes within the classically
    // resolved velocity range.
    const double v_cap = std::sqrt(2.0 * N + 1.0);
    const PointEval pe = phi_point_matrix(trunc, v_cap);
    const int Q = static_cast<int>(pe.nodes.size());
    const MatrixXcd vals = pe.values * un; // (Q x M): u(v_q, x_i)

    double psi_min = std::numeric_limits<double>::infinity();
    const VectorXd x = grid.nodes();
    auto phase = [&](int i, int q) {
        return std::sqrt(1.0 + x(i) * x(i)) + pe.nodes[q] * pe.nodes[q];
    };
    for (int i = 0; i < M; ++i)
        for (int q = 0; q < Q; ++q) psi_min = std::min(psi_min, phase(i, q));
    // Shells stop at the largest phase the spatial window itself can realize.
    // Beyond it every sample needs large |v|, where an N-mode expansion decays
    // like the basis weight e^{-v^2/4} no matter what the state is, so the
    // shell maxima out there measure the truncation, not the state.
    double psi_max = 0.0;
    for (int i = 0; i < M; ++i) psi_max = std::max(psi_max, std::sqrt(1.0 + x(i) * x(i)));

    const int n_shells = 32;
    const double width = (psi_max - psi_min) / n_shells;
    if (!(width > 0.0)) throw ValidationError("decay fit: degenerate phase range");
    std::vector<double> shell_max(n_shells, 0.0);
    // Each shell records the phase of the sample attaining its maximum, not
    // the bin midpoint: for any profile that is a function of the phase the
    // (phase, log max) pairs then sit exactly on the profile, immune to how
    // the discrete samples happen to fill each bin.
    std::vector<double> shell_arg(n_shells, 0.0);
    for (int i = 0; i < M; ++i)
        for (int q = 0; q < Q; ++q) {
            const double p = phase(i, q);
            if (p > psi_max) continue;
            int k = static_cast<int>((p - psi_min) / width);
            k = std::min(k, n_shells - 1);
            const double a = std::abs(vals(q, i));
            if (a > shell_max[k]) {
                shell_max[k] = a;
                shell_arg[k] = p;
            }
        }

    DecayReport rep;
    std::ostringstream flags;
    for (int k = 0; k < n_shells; ++k) {
        if (shell_max[k] < 1e-12) continue; // below the amplitude floor
        rep.shell_phase.push_back(shell_arg[k]);
        rep.shell_logmax.push_back(std::log(shell_max[k]));
    }
    rep.shells_used = static_cast<int>(rep.shell_phase.size());
    if (rep.shells_used < 4)
        throw NumericalError(
            "decay fit: fewer than 4 shells above the 1e-12 amplitude floor — "
            "insufficient dynamic range for a rate fit");

    // Least squares log(max) = b - c * phase.
    const int m = rep.shells_used;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int k = 0; k < m; ++k) {
        sx += rep.shell_phase[k];
        sy += rep.shell_logmax[k];
        sxx += rep.shell_phase[k] * rep.shell_phase[k];
        sxy += rep.shell_phase[k] * rep.shell_logmax[k];
        syy += rep.shell_logmax[k] * rep.shell_logmax[k];
    }
    const double det = m * sxx - sx * sx;
    const double slope = (m * sxy - sx * sy) / det;
    const double ss_tot = syy - sy * sy / m;
    double ss_res = 0.0;
    const double b = (sy - slope * sx) / m;
    for (int k = 0; k < m; ++k) {
        const double r = rep.shell_logmax[k] - (b + slope * rep.shell_phase[k]);
        ss_res += r * r;
    }
    const double c = -slope;
    rep.fit_quality = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    rep.non_decaying = c < 0.02;
    if (rep.non_decaying) flags << "non_decaying;";
    if (c < 0.0) flags << "negative_slope_clamped;";
    rep.fitted_rate = std::max(0.0, c);
    rep.flags = flags.str();
    return rep;
}

std::vector<MomentRow> moment_growth(const Eigen::MatrixXcd& u, const Grid& grid,
                                     const HermiteTruncation& trunc,
                                     const std::vector<double>& s_list) {
    const int N = trunc.N;
    const int M = grid.size();
    if (u.rows() != N || u.cols() != M)
        throw ValidationError("moments: state must be modes x nodes for this truncation/grid");
    if (s_list.empty()) throw ValidationError("moments: s_list must be nonempty");
    for (size_t k = 0; k < s_list.size(); ++k) {
        if (!std::isfinite(s_list[k])) throw ValidationError("moments: s_list must be finite");
        if (k > 0 && !(s_list[k] > s_list[k - 1]))
            throw ValidationError("moments: s_list must be strictly increasing");
    }

    // Full quadrature cloud (weights included) for pointwise velocity norms.
    const PointEval pe = phi_point_matrix(trunc, std::numeric_limits<double>::infinity());
    const int Q = static_cast<int>(pe.nodes.size());
    const MatrixXcd vals = pe.values * u; // (Q x M)
    const double h = grid.step();
    const VectorXd x = grid.nodes();
    const double x_edge = 0.9 * x.cwiseAbs().maxCoeff();

    std::vector<MomentRow> table;
    table.reserve(s_list.size());
    for (double s : s_list) {
        double total = 0.0, boundary = 0.0;
        for (int i = 0; i < M; ++i) {
            const double bx = std::sqrt(1.0 + x(i) * x(i));
            double col = 0.0;
            for (int q = 0; q < Q; ++q) {
                const double bv = std::sqrt(1.0 + pe.nodes[q] * pe.nodes[q]);
                const double w = std::pow(bx + bv, 2.0 * s);
                col += pe.weights[q] * w * std::norm(vals(q, i));
            }
            total += h * col;
            if (std::abs(x(i)) >= x_edge) boundary += h * col;
        }
        MomentRow row;
        row.s = s;
        row.norm = std::sqrt(total);
        row.boundary_fraction = total > 0.0 ? boundary / total : 0.0;
        row.window_dominated = row.boundary_fraction > 0.5;
        table.push_back(row);
    }
    return table;
}

} // namespace kfp
