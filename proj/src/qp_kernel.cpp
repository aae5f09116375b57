#include "kfp/qp.hpp"

#include "kfp/errors.hpp"

#include <Eigen/Dense>
#include <quadmath.h>

#include <cmath>
#include <string>

namespace kfp::qp {

namespace {

const qreal kPi = M_PIq;

qreal inv_sqrt_2pi() {
    static const qreal v = qreal(1) / sqrtq(qreal(2) * kPi);
    return v;
}

} // namespace

qreal qabs(const qcomplex& z) { return hypotq(z.re, z.im); }

qreal qnorm2(const qcomplex& z) { return z.re * z.re + z.im * z.im; }

qcomplex qconj(const qcomplex& z) { return {z.re, -z.im}; }

qcomplex qdiv(const qcomplex& a, const qcomplex& b) {
    // Smith's algorithm: scale by the dominant component so intermediate
    // products stay in range even for very large/small magnitudes.
    if (fabsq(b.re) >= fabsq(b.im)) {
        const qreal t = b.im / b.re;
        const qreal den = b.re + b.im * t;
        return {(a.re + a.im * t) / den, (a.im - a.re * t) / den};
    }
    const qreal t = b.re / b.im;
    const qreal den = b.re * t + b.im;
    return {(a.re * t + a.im) / den, (a.im * t - a.re) / den};
}

qcomplex qexp(const qcomplex& z) {
    const qreal m = expq(z.re);
    return {m * cosq(z.im), m * sinq(z.im)};
}

std::complex<double> to_double(const qcomplex& z) {
    return {static_cast<double>(z.re), static_cast<double>(z.im)};
}

void p_batch(qreal s, int jmax, qreal* out) {
    out[0] = 1;
    if (jmax == 0) return;
    out[1] = s;
    for (int j = 1; j < jmax; ++j) {
        out[j + 1] = (s * out[j] - sqrtq(qreal(j)) * out[j - 1]) / sqrtq(qreal(j + 1));
    }
}

void p_batch(const qcomplex& s, int jmax, qcomplex* out) {
    out[0] = qcomplex(qreal(1));
    if (jmax == 0) return;
    out[1] = s;
    for (int j = 1; j < jmax; ++j) {
        const qreal rj = sqrtq(qreal(j));
        const qreal rj1 = sqrtq(qreal(j + 1));
        qcomplex t = s * out[j] - out[j - 1] * rj;
        out[j + 1] = {t.re / rj1, t.im / rj1};
    }
}

QuadratureRule gauss_rule(int npoints) {
    if (npoints < 1) throw ValidationError("gauss_rule: need at least one node");
    const int n = npoints;

    // Double-precision seed: Golub–Welsch on the Jacobi matrix (zero diagonal,
    // off-diagonal sqrt(k)).
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw NumericalError("gauss_rule: seed eigensolve failed");

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    rule.nodes_d.resize(n);
    rule.weights_d.resize(n);

    std::vector<qreal> q(n + 1); // orthonormal ladder values q_0..q_n
    for (int i = 0; i < n; ++i) {
        qreal x = es.eigenvalues()(i);
        // Newton polish on the orthonormal polynomial q_n (same roots as He_n),
        // using q_n' = sqrt(n) q_{n-1}.
        for (int it = 0; it < 12; ++it) {
            p_batch(x, n, q.data());
            const qreal deriv = sqrtq(qreal(n)) * q[n - 1];
            const qreal step = q[n] / deriv;
            x -= step;
            if (fabsq(step) <= qreal(1e-32) * (qreal(1) + fabsq(x))) break;
        }
        p_batch(x, n, q.data());
        // Christoffel weight: 1 / sum_{k<n} q_k(x)^2, normalized so that the
        // ladder is orthonormal against exp(-s^2/2): q_k = p_k / (2 pi)^{1/4}.
        qreal s = 0;
        for (int k = 0; k < n; ++k) s += q[k] * q[k];
        const qreal w = sqrtq(qreal(2) * kPi) / s; // (2pi)^{1/2} from q_0^2 = (2pi)^{-1/2}
        rule.nodes[i] = x;
        rule.weights[i] = w;
        rule.nodes_d[i] = static_cast<double>(x);
        rule.weights_d[i] = static_cast<double>(w);
    }
    return rule;
}

std::vector<qcomplex> shifted_coeff_matrix(int N, int lmax, qreal xi,
                                           const QuadratureRule& rule) {
    if (N < 1 || lmax < 0) throw ValidationError("shifted_coeff_matrix: bad sizes");
    const int nn = rule.size();
    std::vector<qcomplex> C(static_cast<size_t>(N) * (lmax + 1), qcomplex());
    std::vector<qreal> pb(N);
    std::vector<qcomplex> pl(lmax + 1);
    const qreal ex = expq(xi * xi); // exp(xi^2) from the Gaussian split
    for (int i = 0; i < nn; ++i) {
        const qreal v = rule.nodes[i];
        p_batch(v, N - 1, pb.data());
        const qcomplex z{v, qreal(2) * xi};
        p_batch(z, lmax, pl.data());
        // phi_b(v) phi_l(v+2i xi) = (2pi)^{-1/2} p_b(v) p_l(z) e^{-v^2/2} e^{-i v xi} e^{xi^2}
        const qreal amp = rule.weights[i] * inv_sqrt_2pi() * ex;
        const qreal ph = -v * xi;
        const qcomplex f{amp * cosq(ph), amp * sinq(ph)};
        for (int l = 0; l <= lmax; ++l) {
            const qcomplex g = f * pl[l];
            qcomplex* col = C.data() + static_cast<size_t>(N) * l;
            for (int b = 0; b < N; ++b) col[b] += g * pb[b];
        }
    }
    return C;
}

std::vector<qcomplex> pairing_matrix(int lmax, qreal xi, const QuadratureRule& rule) {
    const int L = lmax + 1;
    const int nn = rule.size();
    std::vector<qcomplex> B(static_cast<size_t>(L) * L, qcomplex());
    std::vector<qcomplex> pl(L);
    const qreal ex = expq(qreal(2) * xi * xi);
    for (int i = 0; i < nn; ++i) {
        const qreal v = rule.nodes[i];
        const qcomplex z{v, qreal(2) * xi};
        p_batch(z, lmax, pl.data());
        // psi_l(z) psi_m(z) = (2pi)^{-1/2} p_l p_m e^{-v^2/2} e^{-2 i v xi} e^{2 xi^2}
        const qreal amp = rule.weights[i] * inv_sqrt_2pi() * ex;
        const qreal ph = qreal(-2) * v * xi;
        const qcomplex h{amp * cosq(ph), amp * sinq(ph)};
        for (int l = 0; l < L; ++l) {
            const qcomplex hl = h * pl[l];
            for (int m = l; m < L; ++m) B[l + static_cast<size_t>(L) * m] += hl * pl[m];
        }
    }
    for (int l = 0; l < L; ++l)
        for (int m = 0; m < l; ++m) B[l + static_cast<size_t>(L) * m] = B[m + static_cast<size_t>(L) * l];
    return B;
}

ProjectionChecks projection_checks(int N, int lmax, qreal xi, const QuadratureRule& rule) {
    const int L = lmax + 1;
    const auto C = shifted_coeff_matrix(N, lmax, xi, rule);
    const auto B = pairing_matrix(lmax, xi, rule);

    ProjectionChecks out;
    out.lmax = lmax;
    out.norm.resize(L);
    out.pairing_dev.resize(static_cast<size_t>(L) * L);
    out.idem_resid.resize(static_cast<size_t>(L) * L);
    out.semisimple.resize(L);

    // Euclidean norms of the coefficient columns: ||Pi_l|| = ||c_l||^2.
    std::vector<qreal> cnorm(L);
    for (int l = 0; l < L; ++l) {
        qreal s = 0;
        const qcomplex* col = C.data() + static_cast<size_t>(N) * l;
        for (int b = 0; b < N; ++b) s += qnorm2(col[b]);
        cnorm[l] = sqrtq(s);
        out.norm[l] = static_cast<double>(s);
    }

    // Bilinear Gram of the coefficient columns (no conjugation): this is the
    // scalar that appears in the product Pi_l Pi_m = (c_l^T c_m) c_l c_m^T.
    for (int l = 0; l < L; ++l) {
        const qcomplex* cl = C.data() + static_cast<size_t>(N) * l;
        for (int m = 0; m < L; ++m) {
            const qcomplex* cm = C.data() + static_cast<size_t>(N) * m;
            qcomplex s{};
            for (int b = 0; b < N; ++b) s += cl[b] * cm[b];
            const qreal delta = (l == m) ? qreal(1) : qreal(0);
            const qcomplex dev{s.re - delta, s.im};
            // ||Pi_l Pi_m - delta Pi_l|| for rank-one factors is exactly
            // |c_l^T c_m - delta| * ||c_l|| * ||c_m||.
            out.idem_resid[l + static_cast<size_t>(L) * m] =
                static_cast<double>(qabs(dev) * cnorm[l] * cnorm[m]);

            const qcomplex bval = B[l + static_cast<size_t>(L) * m];
            const qcomplex bdev{bval.re - delta, bval.im};
            out.pairing_dev[l + static_cast<size_t>(L) * m] = static_cast<double>(qabs(bdev));
        }
    }

    // ||(A - E_l) Pi_l|| with the analytic eigenvalue E_l = l + xi^2 and
    // A = diag(j) + i xi tridiag(sqrt(j)) applied in quad precision.
    for (int l = 0; l < L; ++l) {
        const qcomplex* c = C.data() + static_cast<size_t>(N) * l;
        const qreal El = qreal(l) + xi * xi;
        qreal resid2 = 0;
        for (int j = 0; j < N; ++j) {
            qcomplex lo{}, hi{};
            if (j > 0) lo = c[j - 1] * sqrtq(qreal(j));
            if (j + 1 < N) hi = c[j + 1] * sqrtq(qreal(j + 1));
            const qcomplex off = lo + hi; // multiplied by i*xi below
            qcomplex r{(qreal(j) - El) * c[j].re - xi * off.im,
                       (qreal(j) - El) * c[j].im + xi * off.re};
            resid2 += qnorm2(r);
        }
        out.semisimple[l] = static_cast<double>(sqrtq(resid2) * cnorm[l]);
    }

    for (double d : out.pairing_dev) out.max_pairing_dev = std::max(out.max_pairing_dev, d);
    for (double d : out.idem_resid) out.max_idem_resid = std::max(out.max_idem_resid, d);
    for (double d : out.semisimple) out.max_semisimple = std::max(out.max_semisimple, d);
    return out;
}

void basis_matrices(int N, const QuadratureRule& rule, double* vmat, double* dmat) {
    const int nn = rule.size();
    std::vector<qreal> V(static_cast<size_t>(N) * N, qreal(0));
    std::vector<qreal> D(static_cast<size_t>(N) * N, qreal(0));
    std::vector<qreal> p(N + 1);
    for (int q = 0; q < nn; ++q) {
        const qreal x = rule.nodes[q];
        p_batch(x, N, p.data());
        const qreal w = rule.weights[q] * inv_sqrt_2pi();
        for (int j = 0; j < N; ++j) {
            const qreal vj = w * x * p[j];
            // phi_j' has polynomial part sqrt(j) p_{j-1} - (x/2) p_j
            qreal dj = -(x / qreal(2)) * p[j];
            if (j > 0) dj += sqrtq(qreal(j)) * p[j - 1];
            dj *= w;
            for (int i = 0; i < N; ++i) {
                V[i + static_cast<size_t>(N) * j] += p[i] * vj;
                D[i + static_cast<size_t>(N) * j] += p[i] * dj;
            }
        }
    }
    for (size_t k = 0; k < V.size(); ++k) {
        vmat[k] = static_cast<double>(V[k]);
        dmat[k] = static_cast<double>(D[k]);
    }
}

NewtonResult charpoly_newton(int N, qreal xi, const qcomplex& anchor) {
    NewtonResult res;
    qcomplex z = anchor;
    const qreal xi2 = xi * xi;
    qreal step = 0;
    for (int it = 0; it < 50; ++it) {
        // Leading principal minors of A(xi) - z and their z-derivatives:
        //   D_k = (k-1-z) D_{k-1} + xi^2 (k-1) D_{k-2}
        qcomplex Dm2{}, Dm1{qreal(1), qreal(0)};
        qcomplex Pm2{}, Pm1{}; // derivatives
        for (int k = 1; k <= N; ++k) {
            const qreal a = qreal(k - 1);
            const qcomplex diag{a - z.re, -z.im};
            const qcomplex D = diag * Dm1 + Dm2 * (xi2 * a);
            const qcomplex P = diag * Pm1 + Pm2 * (xi2 * a) - Dm1;
            Dm2 = Dm1;
            Dm1 = D;
            Pm2 = Pm1;
            Pm1 = P;
        }
        if (qabs(Pm1) == qreal(0)) break;
        const qcomplex dz = qdiv(Dm1, Pm1);
        z -= dz;
        step = qabs(dz);
        res.iterations = it + 1;
        if (step <= qreal(1e-28) * (qreal(1) + qabs(z))) {
            res.converged = true;
            break;
        }
    }
    res.root = to_double(z);
    res.final_step = static_cast<double>(step);
    res.deviation = static_cast<double>(qabs(z - anchor));
    return res;
}

} // namespace kfp::qp
