#pragma once

#include "kfp/hermite.hpp"
#include "kfp/qp.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace kfp {

// Truncated matrix of the fiber operator -d^2/dv^2 + v^2/4 - 1/2 + i v xi in
// the {phi_j} basis: diag(0..N-1) + i xi V with V the frozen tridiagonal of v.
struct FiberMatrix {
    double xi = 0;
    int N = 0;
    Eigen::MatrixXcd entries;
};

FiberMatrix assemble_fiber(double xi, const HermiteTruncation& trunc);

// Radial cutoff in the xi variable used by the resolvent splitting: equal to 1
// for |xi|^2 <= plateau_r, 0 for |xi|^2 >= support_r, quintic smoothstep in
// between (any smooth bump with these plateaus is admissible).
struct CutoffSpec {
    int l;              // highest retained threshold
    double a;           // spectral split point, l < a < l+1
    double plateau_r;   // chi = 1 on {|xi|^2 <= plateau_r}
    double support_r;   // chi = 0 on {|xi|^2 >= support_r}

    CutoffSpec(int l_, double a_);
    CutoffSpec(int l_, double a_, double plateau, double support);

    double chi(double xi) const;
    double chi1(double xi) const { return 1.0 - chi(xi); }
};

// Rank-one spectral projection onto the eigenvalue l + xi^2, assembled from
// shifted-state coefficients as the bilinear outer product c_l c_l^T.
// Throws NumericalError if the idempotency residual (computed in quad
// precision) exceeds idem_tol * ||Pi_l||: the truncation is too small for this
// shift.
Eigen::MatrixXcd riesz_projection(int l, double xi, const HermiteTruncation& trunc,
                                  double idem_tol = 1e-6);

// Inverse of (fiber matrix - z).  The inverse is computed by dense LU and, when
// the double-precision residual cannot be certified, polished by one
// Newton-Schulz step in extended precision; the returned residual
// ||(A - z) R - I||_F is measured in extended precision.  Throws when z is
// within min_sep of the analytic spectrum {k + xi^2} or when the residual
// cannot be brought under resid_tol.
struct FiberResolvent {
    Eigen::MatrixXcd R;
    double residual = 0;
};

FiberResolvent fiber_resolvent_checked(std::complex<double> z, double xi,
                                       const HermiteTruncation& trunc,
                                       double resid_tol = 1e-10, double min_sep = 1e-6);

Eigen::MatrixXcd fiber_resolvent(std::complex<double> z, double xi, const HermiteTruncation& trunc);

// r_l(z, xi) = R(z, xi) - sum_{k <= l} chi(xi) Pi_k / (xi^2 + k - z).
// For z off the real axis this is a direct evaluation; for real z the value is
// obtained by Neville extrapolation of z +- i delta over cutoff-respecting
// delta sequences (the remainder is holomorphic across the axis for Re z < a).
Eigen::MatrixXcd remainder(std::complex<double> z, const CutoffSpec& cutoff, double xi,
                           const HermiteTruncation& trunc);

struct BoundaryExtrapolation {
    Eigen::MatrixXcd value;
    double step_ratio;   // ||N2 - N1|| / ||N1 - N0||: must contract
    double est_error;    // last extrapolation update size
};

// One-sided boundary value: extrapolates z = lambda + side * i * delta, delta -> 0.
BoundaryExtrapolation remainder_boundary(double lambda, int side, const CutoffSpec& cutoff,
                                         double xi, const HermiteTruncation& trunc,
                                         const std::vector<double>& deltas = {1e-2, 1e-3, 1e-4});

// Weyl symbol of chi(xi) Pi_k^xi computed from its integral kernel,
//   b(v, eta) = integral K(v + y/2, v - y/2) e^{-i y eta} dy,
// on a rectangular (v, eta) grid, together with the closed-form Gaussian
// reference sqrt(2) chi e^{-v^2 - eta^2 + 2 i v xi + 2 xi^2} for k = 0.
// Mismatch against the reference is reported, not thrown.
struct WeylSymbol {
    Eigen::MatrixXcd computed;      // (v, eta) grid values
    Eigen::MatrixXcd closed_form;   // k = 0 only, otherwise empty
    double max_closed_form_dev = 0;
};

WeylSymbol weyl_symbol_of_projection(int k, double xi, const std::vector<double>& vgrid,
                                     const std::vector<double>& etagrid,
                                     const HermiteTruncation& trunc, const CutoffSpec& cutoff);

// Matrix exponential exp(-t A(xi)) by scaling-and-squaring.
Eigen::MatrixXcd fiber_semigroup(double t, double xi, const HermiteTruncation& trunc);

// All eigenvalues of the truncated fiber matrix, sorted by real part.
std::vector<std::complex<double>> fiber_eigenvalues(double xi, const HermiteTruncation& trunc);

// Quad-precision Newton refinement on the characteristic polynomial, anchored
// at the analytic location l + xi^2.
qp::NewtonResult refined_fiber_eigenvalue(int l, double xi, const HermiteTruncation& trunc);

} // namespace kfp
