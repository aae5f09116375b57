#include "kfp/hermite.hpp"

#include "kfp/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace kfp {

namespace {

void require_scalar_index(const MultiIndex& alpha, const char* where) {
    if (alpha.entries.size() != 1)
        throw ValidationError(std::string(where) + ": only velocity dimension 1 is discretized");
    if (alpha.entries[0] < 0) throw ValidationError(std::string(where) + ": negative index");
}

} // namespace

int MultiIndex::order() const {
    int s = 0;
    for (int e : entries) {
        if (e < 0) throw ValidationError("MultiIndex: negative entry");
        s += e;
    }
    return s;
}

HermiteTruncation::HermiteTruncation(int N_) : N(N_) {
    if (N < 2) throw ValidationError("HermiteTruncation: N >= 2 required");
    rule_ = std::make_shared<qp::QuadratureRule>(qp::gauss_rule(4 * N));
    quadrature_nodes = rule_->nodes_d;
    quadrature_weights = rule_->weights_d;

    vmat_.resize(N, N);
    dmat_.resize(N, N);
    qp::basis_matrices(N, *rule_, vmat_.data(), dmat_.data());

    // The oracle must reproduce the tridiagonal structure to round-off before
    // we freeze it; anything else means the basis or the rule is broken.
    double off = 0;
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
            if (std::abs(i - j) > 1) off = std::max(off, std::max(std::abs(vmat_(i, j)), std::abs(dmat_(i, j))));
    if (off > 1e-13)
        throw NumericalError("HermiteTruncation: v/dv matrix elements not tridiagonal (max stray " +
                             std::to_string(off) + ")");
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
            if (std::abs(i - j) > 1) vmat_(i, j) = dmat_(i, j) = 0.0;
}

std::complex<double> hermite_eval(int j, std::complex<double> s, double im_bound) {
    if (j < 0) throw ValidationError("hermite_eval: j >= 0 required");
    if (std::abs(s.imag()) > im_bound)
        throw NumericalError("hermite_eval: |Im s| exceeds overflow bound " + std::to_string(im_bound));
    // p-ladder: p_0 = 1, p_1 = s, p_{j+1} = (s p_j - sqrt(j) p_{j-1}) / sqrt(j+1)
    std::complex<double> pm1 = 0.0, p = 1.0;
    for (int k = 0; k < j; ++k) {
        const std::complex<double> pn = (s * p - std::sqrt(double(k)) * pm1) / std::sqrt(double(k + 1));
        pm1 = p;
        p = pn;
    }
    const double c = std::pow(2.0 * std::numbers::pi, -0.25);
    return c * std::exp(-s * s / 4.0) * p;
}

ShiftedState shifted_state(const MultiIndex& alpha, double xi, const HermiteTruncation& trunc,
                           double tail_tol) {
    require_scalar_index(alpha, "shifted_state");
    const int l = alpha.entries[0];
    const int N = trunc.N;
    if (l >= N) throw ValidationError("shifted_state: |alpha| < N required");

    const auto C = qp::shifted_coeff_matrix(N, l, qp::qreal(xi), trunc.rule());
    ShiftedState st;
    st.coeff.resize(N);
    const qp::qcomplex* col = C.data() + static_cast<size_t>(N) * l;
    for (int b = 0; b < N; ++b) st.coeff(b) = qp::to_double(col[b]);

    const int tail_start = N - (N + 9) / 10;
    const double total = st.coeff.squaredNorm();
    st.tail_fraction = total > 0 ? st.coeff.tail(N - tail_start).squaredNorm() / total : 0.0;
    st.tail_warning = st.tail_fraction > tail_tol;
    return st;
}

Eigen::MatrixXcd shifted_coeff_block(int lmax, double xi, const HermiteTruncation& trunc) {
    if (lmax >= trunc.N) throw ValidationError("shifted_coeff_block: lmax < N required");
    const int N = trunc.N;
    const auto C = qp::shifted_coeff_matrix(N, lmax, qp::qreal(xi), trunc.rule());
    Eigen::MatrixXcd out(N, lmax + 1);
    for (int l = 0; l <= lmax; ++l)
        for (int b = 0; b < N; ++b) out(b, l) = qp::to_double(C[b + static_cast<size_t>(N) * l]);
    return out;
}

Eigen::MatrixXd orthonormality_gram(const HermiteTruncation& trunc) {
    // Direct double-precision quadrature of <phi_j, phi_k>: the Gaussian-carrying
    // phi values stay O(1), so double is fine here (this is the user-facing
    // invariant check, independent of the quad-precision oracle path).
    const int N = trunc.N;
    const auto& nodes = trunc.quadrature_nodes;
    const auto& weights = trunc.quadrature_weights;
    const int nn = static_cast<int>(nodes.size());

    // Bare p_j values overflow double at the outer nodes of large rules, so run
    // the ladder on u_j = p_j * sqrt(w c): the scaling commutes with the linear
    // recurrence and keeps every partial bounded (p_j ~ e^{x^2/4}, sqrt(w) ~
    // e^{-x^2/4}).  Nodes whose weight underflows contribute below round-off
    // and are skipped.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
    std::vector<double> u(N);
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (int i = 0; i < nn; ++i) {
        const double sw = std::sqrt(weights[i] * c);
        if (sw == 0.0) continue;
        u[0] = sw;
        if (N > 1) u[1] = nodes[i] * sw;
        bool ok = true;
        for (int j = 1; j + 1 < N; ++j) {
            u[j + 1] = (nodes[i] * u[j] - std::sqrt(double(j)) * u[j - 1]) / std::sqrt(double(j + 1));
            if (!std::isfinite(u[j + 1])) { ok = false; break; }
        }
        if (!ok) continue;
        for (int j = 0; j < N; ++j)
            for (int k = 0; k <= j; ++k) G(j, k) += u[j] * u[k];
    }
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k) G(j, k) = G(k, j);
    return G;
}

Eigen::MatrixXd mult_operator(const std::function<double(double)>& f,
                              const HermiteTruncation& trunc) {
    // Same scaled-ladder scheme as orthonormality_gram with f inserted into
    // the node sum.
    const int N = trunc.N;
    const auto& nodes = trunc.quadrature_nodes;
    const auto& weights = trunc.quadrature_weights;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
    std::vector<double> u(N);
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (size_t i = 0; i < nodes.size(); ++i) {
        const double sw = std::sqrt(weights[i] * c);
        if (sw == 0.0) continue;
        const double fv = f(nodes[i]);
        if (fv == 0.0) continue;
        u[0] = sw;
        if (N > 1) u[1] = nodes[i] * sw;
        bool ok = true;
        for (int j = 1; j + 1 < N; ++j) {
            u[j + 1] = (nodes[i] * u[j] - std::sqrt(double(j)) * u[j - 1]) / std::sqrt(double(j + 1));
            if (!std::isfinite(u[j + 1])) { ok = false; break; }
        }
        if (!ok) continue;
        for (int j = 0; j < N; ++j)
            for (int k = 0; k <= j; ++k) G(j, k) += fv * u[j] * u[k];
    }
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k) G(j, k) = G(k, j);
    return G;
}

PointEval phi_point_matrix(const HermiteTruncation& trunc, double v_cap) {
    const int N = trunc.N;
    PointEval pe;
    for (size_t i = 0; i < trunc.quadrature_nodes.size(); ++i) {
        const double x = trunc.quadrature_nodes[i];
        if (std::abs(x) > v_cap) continue;
        pe.nodes.push_back(x);
        pe.weights.push_back(trunc.quadrature_weights[i]);
    }
    const int Q = static_cast<int>(pe.nodes.size());
    if (Q == 0) throw ValidationError("phi_point_matrix: no quadrature nodes inside v_cap");
    pe.values.resize(Q, N);
    const double c = std::pow(2.0 * std::numbers::pi, -0.25);
    std::vector<double> p(N);
    for (int q = 0; q < Q; ++q) {
        const double x = pe.nodes[q];
        p[0] = 1.0;
        if (N > 1) p[1] = x;
        for (int j = 1; j + 1 < N; ++j)
            p[j + 1] = (x * p[j] - std::sqrt(double(j)) * p[j - 1]) / std::sqrt(double(j + 1));
        const double gauss = c * std::exp(-x * x / 4.0);
        for (int j = 0; j < N; ++j) pe.values(q, j) = gauss * p[j];
    }
    return pe;
}

} // namespace kfp
