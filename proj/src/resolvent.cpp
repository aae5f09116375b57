#include "kfp/resolvent.hpp"

#include "kfp/errors.hpp"
#include "kfp/linalg.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <cmath>
#include <vector>

namespace kfp {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

const complex<double> II(0.0, 1.0);

// Gauss-Legendre rule with six points on [-1, 1].
constexpr double gl_node[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                               0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
constexpr double gl_weight[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                                 0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

// Product-integration tableau: per integration cell, the Gauss points, their
// weights, and the values of the degree-5 Lagrange basis of a 6-node stencil
// (window around the cell, clamped at the ends of the chain).  Cells lie
// between consecutive nodes, so a kink of the kernel at any node never falls
// inside a cell.
struct PiCell {
    int stencil0;
    double y[6];
    double wq[6];
    double lag[6][6]; // lag[q][k] = L_{stencil0 + k}(y[q])
};

PiCell make_cell(const std::vector<double>& nodes, int stencil0, double a, double b) {
    PiCell cell;
    cell.stencil0 = stencil0;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int q = 0; q < 6; ++q) {
        cell.y[q] = mid + half * gl_node[q];
        cell.wq[q] = half * gl_weight[q];
        for (int k = 0; k < 6; ++k) {
            double L = 1.0;
            for (int kp = 0; kp < 6; ++kp) {
                if (kp == k) continue;
                L *= (cell.y[q] - nodes[stencil0 + kp]) / (nodes[stencil0 + k] - nodes[stencil0 + kp]);
            }
            cell.lag[q][k] = L;
        }
    }
    return cell;
}

// Cells spanning [left_edge, nodes.back()] when lead_from is supplied
// (lead_from < nodes.front(), density extrapolated from the first stencil),
// otherwise [nodes.front(), nodes.back()].
std::vector<PiCell> product_cells(const std::vector<double>& nodes, const double* lead_from) {
    const int n = static_cast<int>(nodes.size());
    if (n < 6) throw ValidationError("product integration: need at least 6 nodes");
    std::vector<PiCell> cells;
    cells.reserve(static_cast<size_t>(n));
    if (lead_from) cells.push_back(make_cell(nodes, 0, *lead_from, nodes[0]));
    for (int c = 0; c + 1 < n; ++c) {
        const int s0 = std::clamp(c - 2, 0, n - 6);
        cells.push_back(make_cell(nodes, s0, nodes[c], nodes[c + 1]));
    }
    return cells;
}

// Dense matrix A with A f ~= integral K(x_i, y) f(y) dy over the cell chain.
template <class Kernel>
MatrixXcd product_integrate(const std::vector<double>& rows, const std::vector<PiCell>& cells,
                            int ncols, Kernel&& K) {
    MatrixXcd A = MatrixXcd::Zero(static_cast<Index>(rows.size()), ncols);
    for (Index i = 0; i < A.rows(); ++i) {
        const double x = rows[static_cast<size_t>(i)];
        for (const PiCell& cell : cells) {
            for (int q = 0; q < 6; ++q) {
                const complex<double> kv = K(x, cell.y[q]) * cell.wq[q];
                for (int k = 0; k < 6; ++k) A(i, cell.stencil0 + k) += kv * cell.lag[q][k];
            }
        }
    }
    return A;
}

// T * (G kron I_N) without forming the Kronecker factor: x-blocks of T mix
// through G on the right.
MatrixXcd mult_kron_right(const MatrixXcd& T, const MatrixXcd& G, int N) {
    const Index MN = T.rows();
    const int M = static_cast<int>(G.rows());
    if (T.cols() != MN || static_cast<Index>(M) * N != MN)
        throw ValidationError("mult_kron_right: shape mismatch");
    MatrixXcd R(MN, MN), S(MN, M), P(MN, M);
    for (int jp = 0; jp < N; ++jp) {
        for (int ip = 0; ip < M; ++ip) S.col(ip) = T.col(static_cast<Index>(ip) * N + jp);
        P.noalias() = S * G;
        for (int ip = 0; ip < M; ++ip) R.col(static_cast<Index>(ip) * N + jp) = P.col(ip);
    }
    return R;
}

VectorXd weight_vector(const Grid& grid, int N, double s) {
    const VectorXd wx = grid.bracket_pow(-s);
    VectorXd w(static_cast<Index>(grid.size()) * N);
    for (int i = 0; i < grid.size(); ++i)
        for (int j = 0; j < N; ++j) w(static_cast<Index>(i) * N + j) = wx(i);
    return w;
}

// Shared assembly of the representation-formula resolvent: mode terms
// (cutoff-masked rank-one fiber projections composed with scalar kernel
// matrices) plus a remainder multiplier, conjugated by <x>^{-s}.
MatrixXcd assemble_representation(const HermiteTruncation& trunc, const Grid& grid,
                                  const CutoffSpec& cutoff, double s,
                                  const std::vector<complex<double>>& mode_mu, int sign,
                                  const std::function<MatrixXcd(double)>& remainder_block) {
    const int M = grid.size();
    const int N = trunc.N;
    const int l = cutoff.l;
    const VectorXd& xi = grid.frequencies();

    std::vector<std::vector<MatrixXcd>> mode_blocks(static_cast<size_t>(l) + 1,
                                                    std::vector<MatrixXcd>(static_cast<size_t>(M)));
    std::vector<MatrixXcd> rem_blocks(static_cast<size_t>(M));
    const MatrixXcd zero = MatrixXcd::Zero(N, N);
    for (int m = 0; m < M; ++m) {
        const double c = cutoff.chi(xi(m));
        if (c == 0.0) {
            for (int k = 0; k <= l; ++k) mode_blocks[static_cast<size_t>(k)][static_cast<size_t>(m)] = zero;
        } else {
            const MatrixXcd C = shifted_coeff_block(l, xi(m), trunc);
            for (int k = 0; k <= l; ++k)
                mode_blocks[static_cast<size_t>(k)][static_cast<size_t>(m)] =
                    c * (C.col(k) * C.col(k).transpose());
        }
        rem_blocks[static_cast<size_t>(m)] = remainder_block(xi(m));
    }

    MatrixXcd R = fourier_multiplier_matrix(grid, N, rem_blocks);
    for (int k = 0; k <= l; ++k) {
        const MatrixXcd T = fourier_multiplier_matrix(grid, N, mode_blocks[static_cast<size_t>(k)]);
        const MatrixXcd G = laplace_kernel_matrix(grid, mode_mu[static_cast<size_t>(k)], sign);
        R += mult_kron_right(T, G, N);
    }

    if (s != 0.0) {
        const VectorXcd w = weight_vector(grid, N, s).cast<complex<double>>();
        R = w.asDiagonal() * R * w.asDiagonal();
    }
    return R;
}

// Neville extrapolation of matrix samples to parameter 0.
MatrixXcd neville_to_zero(const std::vector<double>& t, std::vector<MatrixXcd> P) {
    const int n = static_cast<int>(t.size());
    for (int m = 1; m < n; ++m)
        for (int i = 0; i + m < n; ++i)
            P[static_cast<size_t>(i)] =
                (t[static_cast<size_t>(i + m)] * P[static_cast<size_t>(i)] -
                 t[static_cast<size_t>(i)] * P[static_cast<size_t>(i + 1)]) /
                (t[static_cast<size_t>(i + m)] - t[static_cast<size_t>(i)]);
    return P[0];
}

} // namespace

std::complex<double> kernel_root(std::complex<double> mu, int sign) {
    if (sign != 1 && sign != -1)
        throw ValidationError("laplace kernel: sign must be +1 or -1");
    if (std::abs(mu) < 1e-6)
        throw ValidationError("laplace kernel: spectral parameter within 1e-6 of the branch point");
    if (mu.imag() != 0.0) {
        complex<double> w = std::sqrt(mu);
        if (w.imag() < 0.0) w = -w; // decaying branch
        return w;
    }
    if (mu.real() < 0.0) return complex<double>(0.0, std::sqrt(-mu.real()));
    return complex<double>(sign * std::sqrt(mu.real()), 0.0);
}

Eigen::MatrixXcd laplace_kernel_matrix(const Grid& grid, std::complex<double> mu, int sign) {
    const complex<double> w = kernel_root(mu, sign);
    const complex<double> pref = II / (2.0 * w);
    const VectorXd& x = grid.nodes();
    std::vector<double> nodes(x.data(), x.data() + x.size());
    const std::vector<PiCell> cells = product_cells(nodes, nullptr);
    return product_integrate(nodes, cells, grid.size(), [&](double xi_, double y) {
        return pref * std::exp(II * w * std::abs(xi_ - y));
    });
}

Eigen::VectorXcd laplace_kernel_apply(const Grid& grid, std::complex<double> mu, int sign,
                                      const Eigen::VectorXcd& f) {
    if (f.size() != grid.size())
        throw ValidationError("laplace kernel: sample count must match the grid");
    return laplace_kernel_matrix(grid, mu, sign) * f;
}

Eigen::MatrixXcd laplace_kernel_matrix_3d(const RadialGrid& rg, std::complex<double> mu, int sign) {
    if (rg.M < 8 || !(rg.r_max > 0))
        throw ValidationError("radial kernel: need r_max > 0 and at least 8 nodes");
    const complex<double> w = kernel_root(mu, sign);
    const double h = rg.h();
    std::vector<double> nodes(static_cast<size_t>(rg.M));
    for (int i = 0; i < rg.M; ++i) nodes[static_cast<size_t>(i)] = (i + 1) * h;
    const double origin = 0.0;
    const std::vector<PiCell> cells = product_cells(nodes, &origin);
    return product_integrate(nodes, cells, rg.M, [&](double r, double rho) {
        // Angular average of e^{i w |x-y|} / (4 pi |x-y|) against rho^2 drho.
        return (rho / (2.0 * r)) *
               (std::exp(II * w * (r + rho)) - std::exp(II * w * std::abs(r - rho))) / (II * w);
    });
}

Eigen::MatrixXcd free_resolvent_boundary(const HermiteTruncation& trunc, const Grid& grid,
                                         const CutoffSpec& cutoff, const BoundaryParams& p) {
    if (p.sign != 1 && p.sign != -1)
        throw ValidationError("boundary value: sign must be +1 or -1");
    if (!(p.s > 0.5))
        throw ValidationError("boundary value: weight exponent must exceed 1/2");
    if (!(cutoff.l > p.lambda))
        throw ValidationError("boundary value: cutoff must retain every threshold below lambda");
    if (!(cutoff.plateau_r > p.lambda))
        throw ValidationError("boundary value: cutoff plateau must cover the propagating shell");

    std::vector<complex<double>> mode_mu(static_cast<size_t>(cutoff.l) + 1);
    for (int k = 0; k <= cutoff.l; ++k) mode_mu[static_cast<size_t>(k)] = complex<double>(p.lambda - k, 0.0);
    // The kernel constructor re-checks each |mu| >= 1e-6 (threshold proximity).
    for (const auto& mu : mode_mu) (void)kernel_root(mu, p.sign);

    auto rem = [&](double xi) {
        return remainder_boundary(p.lambda, p.sign, cutoff, xi, trunc, p.deltas).value;
    };
    return assemble_representation(trunc, grid, cutoff, p.s, mode_mu, p.sign, rem);
}

Eigen::MatrixXcd free_resolvent_offaxis_kernel(const HermiteTruncation& trunc, const Grid& grid,
                                               const CutoffSpec& cutoff, std::complex<double> z,
                                               double s) {
    if (z.imag() == 0.0)
        throw ValidationError("off-axis kernel path: z must have nonzero imaginary part");
    std::vector<complex<double>> mode_mu(static_cast<size_t>(cutoff.l) + 1);
    for (int k = 0; k <= cutoff.l; ++k) mode_mu[static_cast<size_t>(k)] = z - static_cast<double>(k);
    auto rem = [&](double xi) { return remainder(z, cutoff, xi, trunc); };
    return assemble_representation(trunc, grid, cutoff, s, mode_mu, +1, rem);
}

Eigen::MatrixXcd free_resolvent_offaxis(const HermiteTruncation& trunc, const Grid& grid,
                                        std::complex<double> z, double s) {
    const double dist = z.real() <= 0.0 ? std::abs(z) : std::abs(z.imag());
    if (dist < 1e-6)
        throw ValidationError("off-axis resolvent: z within 1e-6 of the essential spectrum [0, inf)");
    const int N = trunc.N;
    std::vector<MatrixXcd> blocks(static_cast<size_t>(grid.size()));
    for (int m = 0; m < grid.size(); ++m)
        blocks[static_cast<size_t>(m)] = fiber_resolvent_checked(z, grid.frequencies()(m), trunc).R;
    MatrixXcd R = fourier_multiplier_matrix(grid, N, blocks);
    if (s != 0.0) {
        const VectorXcd w = weight_vector(grid, N, s).cast<complex<double>>();
        R = w.asDiagonal() * R * w.asDiagonal();
    }
    return R;
}

LapProbe lap_probe(const HermiteTruncation& trunc, const Grid& grid, const CutoffSpec& cutoff,
                   double lambda, int sign, double s, const std::vector<double>& eps_seq,
                   double tolerance) {
    if (eps_seq.size() < 2)
        throw ValidationError("lap probe: need at least two offsets");
    for (size_t j = 0; j < eps_seq.size(); ++j) {
        if (!(eps_seq[j] > 0) || (j > 0 && !(eps_seq[j] < eps_seq[j - 1])))
            throw ValidationError("lap probe: offsets must be positive and strictly decreasing");
    }

    LapProbe pr;
    pr.lambda = lambda;
    pr.sign = sign;
    pr.s = s;
    pr.eps = eps_seq;
    pr.window_indicator = std::pow(1.0 + grid.nodes().maxCoeff() * grid.nodes().maxCoeff(), -s);

    std::vector<MatrixXcd> samples;
    samples.reserve(eps_seq.size());
    for (double eps : eps_seq) {
        const complex<double> z(lambda, sign * eps);
        samples.push_back(free_resolvent_offaxis_kernel(trunc, grid, cutoff, z, s));
        pr.norms.push_back(operator_norm(samples.back()));
    }
    for (size_t j = 0; j + 1 < samples.size(); ++j)
        pr.cauchy.push_back(operator_norm(samples[j] - samples[j + 1]));
    pr.cauchy_rate = pr.cauchy.size() >= 2 && pr.cauchy[pr.cauchy.size() - 2] > 0
                         ? pr.cauchy.back() / pr.cauchy[pr.cauchy.size() - 2]
                         : 0.0;

    std::vector<std::string> flags;
    pr.boundary_norm = std::numeric_limits<double>::quiet_NaN();
    pr.boundary_dev = std::numeric_limits<double>::quiet_NaN();
    try {
        BoundaryParams bp;
        bp.lambda = lambda;
        bp.sign = sign;
        bp.s = s;
        const MatrixXcd B = free_resolvent_boundary(trunc, grid, cutoff, bp);
        pr.boundary_norm = operator_norm(B);
        const MatrixXcd extrap = neville_to_zero(eps_seq, std::move(samples));
        pr.boundary_dev = operator_norm(extrap - B) / std::max(pr.boundary_norm, 1e-300);
    } catch (const ValidationError&) {
        flags.push_back("boundary_path_unavailable");
    }

    bool contracting = true;
    for (size_t j = 0; j + 1 < pr.cauchy.size(); ++j)
        if (pr.cauchy[j + 1] > pr.cauchy[j]) contracting = false;
    if (!contracting) flags.push_back("cauchy_not_contracting");
    if (pr.norms.back() >= 3.0 * pr.norms.front()) flags.push_back("threshold_blowup");
    if (pr.window_indicator > 0.01 * tolerance) flags.push_back("window_indicator_above_rule");

    for (size_t j = 0; j < flags.size(); ++j) {
        if (j) pr.flags += ";";
        pr.flags += flags[j];
    }
    return pr;
}

} // namespace kfp
