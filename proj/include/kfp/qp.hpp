#pragma once

// Quad-precision kernel for the Hermite/fiber layer.
//
// The shifted ladder states psi_l(v + 2i xi) have squared norms that grow like
// exp(2 xi^2) * L_l(-4 xi^2) — around 3e19 at l = 32, xi = 2.  Verifying
// biorthogonality and projection identities to absolute 1e-8 through sums of
// terms that large is impossible in double (eps * 3e19 ~ 7e3), so every
// quantity that passes through the shifted states is computed in __float128
// and only rounded at the API boundary.

#include <complex>
#include <vector>

namespace kfp::qp {

using qreal = __float128;

struct qcomplex {
    qreal re{}, im{};

    qcomplex() = default;
    qcomplex(qreal r, qreal i) : re(r), im(i) {}
    explicit qcomplex(qreal r) : re(r), im(0) {}

    qcomplex operator+(const qcomplex& o) const { return {re + o.re, im + o.im}; }
    qcomplex operator-(const qcomplex& o) const { return {re - o.re, im - o.im}; }
    qcomplex operator*(const qcomplex& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    qcomplex operator*(qreal s) const { return {re * s, im * s}; }
    qcomplex operator-() const { return {-re, -im}; }
    qcomplex& operator+=(const qcomplex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    qcomplex& operator-=(const qcomplex& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
};

qreal qabs(const qcomplex& z);
qreal qnorm2(const qcomplex& z); // |z|^2
qcomplex qconj(const qcomplex& z);
qcomplex qdiv(const qcomplex& a, const qcomplex& b);
qcomplex qexp(const qcomplex& z);
std::complex<double> to_double(const qcomplex& z);

// Gauss quadrature for the weight exp(-s^2/2) on the real line.  Nodes are
// seeded by a double symmetric-tridiagonal eigensolve (Golub–Welsch) and
// polished by Newton on the orthonormal polynomial in quad precision; weights
// are Christoffel numbers 1 / sum_k q_k(x_i)^2.  Exact for polynomial degree
// <= 2*npoints - 1.
struct QuadratureRule {
    std::vector<qreal> nodes;
    std::vector<qreal> weights;
    std::vector<double> nodes_d;   // rounded views for the double-precision layer
    std::vector<double> weights_d;

    int size() const { return static_cast<int>(nodes.size()); }
};

QuadratureRule gauss_rule(int npoints);

// Normalized Hermite polynomial ladder p_j = He_j / sqrt(j!),
//   p_{j+1}(s) = (s p_j(s) - sqrt(j) p_{j-1}(s)) / sqrt(j+1),
// evaluated for j = 0..jmax at a real or complex point.  out must hold jmax+1.
void p_batch(qreal s, int jmax, qreal* out);
void p_batch(const qcomplex& s, int jmax, qcomplex* out);

// Coefficients of the shifted state psi_l(. + 2i xi) over the unshifted basis:
//   C(b, l) = integral phi_b(v) phi_l(v + 2i xi) dv,   0 <= b < N, 0 <= l <= lmax.
// Returned column-major: C[b + N*l].  The rule must integrate degree
// 2(N + lmax) exactly; gauss_rule(4N) with lmax <= N does.
std::vector<qcomplex> shifted_coeff_matrix(int N, int lmax, qreal xi,
                                           const QuadratureRule& rule);

// Bilinear pairing of shifted states by direct quadrature of the integral
//   B(l, m) = integral psi_l(v + 2i xi) psi_m(v + 2i xi) dv
// (no conjugation).  Returned (lmax+1)^2 column-major.
std::vector<qcomplex> pairing_matrix(int lmax, qreal xi, const QuadratureRule& rule);

// Residual diagnostics for the rank-one spectral projections Pi_l = c_l c_l^T
// built from the coefficient columns c_l of shifted_coeff_matrix.  All norms
// are Euclidean on the length-N coefficient vectors; the operator 2-norm of a
// rank-one a b^T is |a| |b|, which makes every residual below exact given the
// coefficients.
struct ProjectionChecks {
    int lmax = 0;
    std::vector<double> norm;           // lmax+1: ||Pi_l|| = |c_l|^2
    std::vector<double> pairing_dev;    // (lmax+1)^2: |B(l,m) - delta_lm|, direct integral
    std::vector<double> idem_resid;     // (lmax+1)^2: ||Pi_l Pi_m - delta_lm Pi_l||
    std::vector<double> semisimple;     // lmax+1: ||(A - E_l) Pi_l||
    double max_pairing_dev = 0;
    double max_idem_resid = 0;
    double max_semisimple = 0;
};

ProjectionChecks projection_checks(int N, int lmax, qreal xi, const QuadratureRule& rule);

// Matrix elements <phi_i, v phi_j> and <phi_i, phi_j'> for i,j < N by
// quadrature, computed in quad precision (the polynomial ladder overflows
// double at the outer nodes of large rules) and rounded to double on output.
// Column-major N x N.  The rule must integrate degree 2N exactly.
void basis_matrices(int N, const QuadratureRule& rule, double* vmat, double* dmat);

// Newton refinement of an eigenvalue of the N x N fiber matrix
//   A(xi) = diag(0..N-1) + i xi V,   V = tridiag(sqrt(j))
// on the characteristic polynomial, evaluated by the tridiagonal determinant
// recurrence d_k = (k-1 - z) d_{k-1} + xi^2 (k-1) d_{k-2} in quad precision.
struct NewtonResult {
    std::complex<double> root;
    double deviation = 0;   // |root - anchor|
    double final_step = 0;  // size of last Newton update
    int iterations = 0;
    bool converged = false;
};

NewtonResult charpoly_newton(int N, qreal xi, const qcomplex& anchor);

} // namespace kfp::qp
