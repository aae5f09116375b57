#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

namespace kfp {

// Deterministic pseudo-random complex vector (fixed generator, caller-chosen
// seed) used to start iterative methods and to build test states: results must
// be reproducible bit-for-bit across runs.
Eigen::VectorXcd seeded_vector(int n, unsigned seed);

// Operator 2-norm by power iteration on A^H A with a seeded start; returns a
// value within rel_tol of the true norm for generic matrices (lower bound by
// construction up to the convergence test).
double operator_norm(const Eigen::MatrixXcd& A, double rel_tol = 1e-9, int max_iter = 300);

// Norm of the map x -> apply(x) with x of dimension n, same method.
double operator_norm_apply(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                           const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply_adj,
                           int n, double rel_tol = 1e-9, int max_iter = 300);

// Smallest singular value and the corresponding right singular vector,
// computed by inverse power iteration on (A^H A)^{-1} through one LU
// factorization.  Throws NumericalError if A is exactly singular to LU.
struct SmallestSV {
    double sigma;
    Eigen::VectorXcd right; // unit vector with |A right| = sigma
};

SmallestSV smallest_singular(const Eigen::MatrixXcd& A, double rel_tol = 1e-10,
                             int max_iter = 500);

// A few eigenvalues of A nearest the shift, by Arnoldi iteration on
// (A - shift)^{-1} (dense LU).  Returns Ritz pairs converted back to the
// A-plane, sorted by distance to the shift, with residual estimates
// ||A v - mu v|| for each.
struct RitzPair {
    std::complex<double> value;
    Eigen::VectorXcd vector;
    double residual;
};

std::vector<RitzPair> eigs_near_shift(const Eigen::MatrixXcd& A, std::complex<double> shift,
                                      int count, int krylov_dim = 60, unsigned seed = 7);

// Run fn(i) for i in [0, n) on up to `threads` workers.  Results must be
// written to disjoint pre-allocated slots by index; the partition is
// deterministic and independent of scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace kfp
