#pragma once

#include "kfp/qp.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace kfp {

// Velocity multi-index.  The toolkit discretizes n = 1, where each order l has
// exactly one index; the type keeps the general shape so signatures don't lie.
struct MultiIndex {
    std::vector<int> entries;

    int order() const;
    static MultiIndex single(int j) { return MultiIndex{{j}}; }
};

// Basis truncation plus the Gauss rule (weight exp(-s^2/2), 4N nodes) shared
// by every quadrature in the toolkit.  Also owns the frozen matrix elements of
// v and d/dv in the {phi_j} basis: they are computed once by a quad-precision
// quadrature oracle, checked to be tridiagonal, and cached.
class HermiteTruncation {
public:
    explicit HermiteTruncation(int N);

    int N;
    std::vector<double> quadrature_nodes;
    std::vector<double> quadrature_weights;

    const qp::QuadratureRule& rule() const { return *rule_; }
    const Eigen::MatrixXd& v_matrix() const { return vmat_; }   // symmetric tridiagonal
    const Eigen::MatrixXd& dv_matrix() const { return dmat_; }  // skew tridiagonal

private:
    std::shared_ptr<const qp::QuadratureRule> rule_;
    Eigen::MatrixXd vmat_, dmat_;
};

// phi_j(s): normalized Hermite function, valid for complex s.  Evaluated on
// the polynomial part by three-term recurrence with the Gaussian factored out.
// Throws NumericalError when |Im s| > im_bound (Gaussian factor would overflow).
std::complex<double> hermite_eval(int j, std::complex<double> s, double im_bound = 40.0);

// Expansion of psi_alpha(. + 2i xi) over the unshifted basis.
struct ShiftedState {
    Eigen::VectorXcd coeff;   // length N
    double tail_fraction;     // norm fraction carried by the last 10% of indices
    bool tail_warning;
};

ShiftedState shifted_state(const MultiIndex& alpha, double xi, const HermiteTruncation& trunc,
                           double tail_tol = 1e-6);

// Columns l = 0..lmax of shifted-state coefficients in one pass (N x (lmax+1)).
Eigen::MatrixXcd shifted_coeff_block(int lmax, double xi, const HermiteTruncation& trunc);

// Gram matrix <phi_j, phi_k> for j,k < N via the truncation's quadrature.
Eigen::MatrixXd orthonormality_gram(const HermiteTruncation& trunc);

// Compression of the operator (f u)(v) = f(v) u(v) onto the truncated basis,
// entries <phi_i, f phi_j>, assembled with the owned quadrature rule.
// Intended for smooth bounded f.
Eigen::MatrixXd mult_operator(const std::function<double(double)>& f,
                              const HermiteTruncation& trunc);

// Basis values on the quadrature nodes with |node| <= v_cap:
// values(q, j) = phi_j(node_q).  Used to reconstruct u on a point cloud.
struct PointEval {
    std::vector<double> nodes;   // selected quadrature nodes
    std::vector<double> weights; // matching quadrature weights
    Eigen::MatrixXd values;      // rows: nodes, cols: basis index
};

PointEval phi_point_matrix(const HermiteTruncation& trunc, double v_cap);

} // namespace kfp
