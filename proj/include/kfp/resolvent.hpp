#pragma once

#include "kfp/fiber.hpp"
#include "kfp/fullop.hpp"
#include "kfp/grid.hpp"
#include "kfp/hermite.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace kfp {

// --- scalar Laplace resolvent kernels -------------------------------------
//
// (-d^2/dx^2 - mu)^{-1} on the finite window, assembled as a dense matrix by
// sixth-order product integration (degree-5 interpolation of the density on
// each cell, Gauss-Legendre inside the cell; the |x-y| kink always falls on a
// cell boundary).  For real mu > 0 `sign` picks the boundary branch
// +- i/(2 sqrt(mu)) e^{+- i sqrt(mu)|x-y|}; for any mu off [0, infinity) the
// branch with decaying kernel is taken and `sign` is ignored.
// Refuses |mu| < 1e-6: too close to the branch point for either branch.
Eigen::MatrixXcd laplace_kernel_matrix(const Grid& grid, std::complex<double> mu, int sign);

Eigen::VectorXcd laplace_kernel_apply(const Grid& grid, std::complex<double> mu, int sign,
                                      const Eigen::VectorXcd& f);

// Radial harness for dimension 3: profiles sampled on r_i = i h, i = 1..M.
// The kernel is e^{i w |x-y|} / (4 pi |x-y|) reduced over angles; apply maps
// a radial profile f(rho) to the radial profile of the convolved function.
struct RadialGrid {
    double r_max;
    int M;
    double h() const { return r_max / M; }
};

Eigen::MatrixXcd laplace_kernel_matrix_3d(const RadialGrid& rg, std::complex<double> mu, int sign);

// The square root picked by the kernel branch rules above.
std::complex<double> kernel_root(std::complex<double> mu, int sign);

// --- weighted free resolvent -----------------------------------------------

struct BoundaryParams {
    double lambda = 0.5;
    int sign = +1;      // boundary side lambda + i sign 0
    double s = 0.6;     // weight exponent, s > 1/2
    std::vector<double> deltas = {1e-2, 1e-3, 1e-4}; // remainder extrapolation offsets
};

// <x>^{-s} R0(lambda +- i0) <x>^{-s} through the projection representation:
// mode terms (cutoff-masked rank-one fiber projections composed with scalar
// kernel matrices at mu = lambda - k) plus the holomorphic remainder
// multiplier extrapolated onto the axis.
Eigen::MatrixXcd free_resolvent_boundary(const HermiteTruncation& trunc, const Grid& grid,
                                         const CutoffSpec& cutoff, const BoundaryParams& p);

// Same representation evaluated off the axis (kernels at complex mu = z - k,
// remainder taken directly): the cross-check path for the epsilon limit.
Eigen::MatrixXcd free_resolvent_offaxis_kernel(const HermiteTruncation& trunc, const Grid& grid,
                                               const CutoffSpec& cutoff, std::complex<double> z,
                                               double s);

// Pure fiber-multiplier inverse (periodic spectral calculus), valid well off
// the axis: pre dist(z, [0, infinity)) >= 1e-6.  Weighted by <x>^{-s} on both
// sides; s = 0 gives the plain resolvent of the discretization.
Eigen::MatrixXcd free_resolvent_offaxis(const HermiteTruncation& trunc, const Grid& grid,
                                        std::complex<double> z, double s);

// --- limiting-absorption diagnostics ---------------------------------------

struct LapProbe {
    double lambda;
    int sign;
    double s;
    std::vector<double> eps;    // descending offsets
    std::vector<double> norms;  // weighted resolvent norm at each offset
    std::vector<double> cauchy; // successive differences (size eps-1)
    double cauchy_rate;         // last ratio cauchy[k]/cauchy[k-1]
    double boundary_norm;       // norm of the kernel-path boundary value
    double boundary_dev;        // |extrapolated eps-path - boundary| / boundary_norm
    double window_indicator;    // <x_max>^{-2s}: window-truncation scale
    std::string flags;          // semicolon-separated diagnostics
};

LapProbe lap_probe(const HermiteTruncation& trunc, const Grid& grid, const CutoffSpec& cutoff,
                   double lambda, int sign, double s, const std::vector<double>& eps_seq,
                   double tolerance);

} // namespace kfp
