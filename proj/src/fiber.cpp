#include "kfp/fiber.hpp"

#include "kfp/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace kfp {

namespace {

using cd = std::complex<double>;
using cld = std::complex<long double>;
using MatrixXcld = Eigen::Matrix<cld, Eigen::Dynamic, Eigen::Dynamic>;

double smoothstep5(double t) {
    if (t <= 0) return 0;
    if (t >= 1) return 1;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// distance from z to the analytic fiber spectrum {k + xi^2 : k in N}
double spectrum_distance(cd z, double xi) {
    const double re = z.real() - xi * xi;
    double best = std::abs(z - cd(xi * xi, 0));
    const int k0 = std::max(0, static_cast<int>(std::lround(re)));
    for (int k = std::max(0, k0 - 1); k <= k0 + 1; ++k)
        best = std::min(best, std::abs(z - cd(k + xi * xi, 0)));
    return best;
}

Eigen::MatrixXcd projection_sum(cd z, const CutoffSpec& cutoff, double xi,
                                const HermiteTruncation& trunc) {
    const double c = cutoff.chi(xi);
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(trunc.N, trunc.N);
    if (c == 0.0) return S;
    const auto C = shifted_coeff_block(cutoff.l, xi, trunc);
    for (int k = 0; k <= cutoff.l; ++k) {
        const cd denom = cd(xi * xi + k, 0) - z;
        S.noalias() += (c / denom) * (C.col(k) * C.col(k).transpose());
    }
    return S;
}

// Neville extrapolation of matrix values F(t_j) to t = 0; t may be complex.
struct NevilleOut {
    Eigen::MatrixXcd value;
    double step_ratio;
    double est_error;
};

NevilleOut neville_to_zero(std::vector<Eigen::MatrixXcd> P, const std::vector<cd>& t) {
    const int n = static_cast<int>(P.size());
    std::vector<double> updates;
    Eigen::MatrixXcd prev = P[0];
    for (int m = 1; m < n; ++m) {
        for (int j = 0; j + m < n; ++j) {
            P[j] = (t[j] * P[j + 1] - t[j + m] * P[j]) / (t[j] - t[j + m]);
        }
        updates.push_back((P[0] - prev).norm());
        prev = P[0];
    }
    NevilleOut out;
    out.value = P[0];
    out.est_error = updates.empty() ? 0.0 : updates.back();
    out.step_ratio = (updates.size() >= 2 && updates[updates.size() - 2] > 0)
                         ? updates.back() / updates[updates.size() - 2]
                         : 0.0;
    return out;
}

} // namespace

FiberMatrix assemble_fiber(double xi, const HermiteTruncation& trunc) {
    const int N = trunc.N;
    FiberMatrix fm;
    fm.xi = xi;
    fm.N = N;
    fm.entries = Eigen::MatrixXcd::Zero(N, N);
    for (int j = 0; j < N; ++j) fm.entries(j, j) = cd(j, 0);
    fm.entries += cd(0, xi) * trunc.v_matrix();
    return fm;
}

CutoffSpec::CutoffSpec(int l_, double a_) : CutoffSpec(l_, a_, a_ + 3.0, a_ + 4.0) {}

CutoffSpec::CutoffSpec(int l_, double a_, double plateau, double support)
    : l(l_), a(a_), plateau_r(plateau), support_r(support) {
    if (l < 0) throw ValidationError("CutoffSpec: l >= 0 required");
    if (!(l < a && a < l + 1)) throw ValidationError("CutoffSpec: need l < a < l+1");
    if (!(a < plateau_r && plateau_r < support_r))
        throw ValidationError("CutoffSpec: radii must satisfy a < plateau < support");
}

double CutoffSpec::chi(double xi) const {
    const double r = xi * xi;
    return 1.0 - smoothstep5((r - plateau_r) / (support_r - plateau_r));
}

Eigen::MatrixXcd riesz_projection(int l, double xi, const HermiteTruncation& trunc,
                                  double idem_tol) {
    if (l < 0 || l >= trunc.N) throw ValidationError("riesz_projection: 0 <= l < N required");
    const auto checks = qp::projection_checks(trunc.N, l, qp::qreal(xi), trunc.rule());
    const double resid = checks.idem_resid[l + static_cast<size_t>(l + 1) * l];
    if (resid > idem_tol * checks.norm[l])
        throw NumericalError("riesz_projection: idempotency residual " + std::to_string(resid) +
                             " exceeds tolerance; truncation too small for |xi| = " +
                             std::to_string(std::abs(xi)));
    const auto C = shifted_coeff_block(l, xi, trunc);
    return C.col(l) * C.col(l).transpose();
}

FiberResolvent fiber_resolvent_checked(cd z, double xi, const HermiteTruncation& trunc,
                                       double resid_tol, double min_sep) {
    const double dist = spectrum_distance(z, xi);
    if (dist < min_sep)
        throw NumericalError("fiber_resolvent: z within " + std::to_string(dist) +
                             " of the fiber spectrum");
    const int N = trunc.N;
    const auto A = assemble_fiber(xi, trunc).entries;
    Eigen::MatrixXcd Az = A - z * Eigen::MatrixXcd::Identity(N, N);
    Eigen::MatrixXcd X = Az.partialPivLu().inverse();

    // Certify the residual in extended precision; one Newton-Schulz polish if
    // the plain LU inverse is not certifiably under tolerance (near the axis
    // eps * kappa in double is exactly at the contract scale).
    MatrixXcld Al = Az.cast<cld>();
    MatrixXcld Xl = X.cast<cld>();
    MatrixXcld E = MatrixXcld::Identity(N, N) - Al * Xl;
    long double resid = E.norm();
    if (resid > static_cast<long double>(0.25) * resid_tol) {
        Xl += Xl * E;
        E = MatrixXcld::Identity(N, N) - Al * Xl;
        resid = E.norm();
        X = Xl.cast<cd>();
    }
    if (!(resid <= resid_tol))
        throw NumericalError("fiber_resolvent: residual " + std::to_string(double(resid)) +
                             " above tolerance at distance " + std::to_string(dist));
    return {std::move(X), static_cast<double>(resid)};
}

Eigen::MatrixXcd fiber_resolvent(cd z, double xi, const HermiteTruncation& trunc) {
    return fiber_resolvent_checked(z, xi, trunc).R;
}

Eigen::MatrixXcd remainder(cd z, const CutoffSpec& cutoff, double xi,
                           const HermiteTruncation& trunc) {
    if (!(z.real() < cutoff.a))
        throw ValidationError("remainder: Re z < a required");
    if (std::abs(z.imag()) > 1e-12) {
        return fiber_resolvent(z, xi, trunc) - projection_sum(z, cutoff, xi, trunc);
    }
    // Real z: approach the axis from both sides and extrapolate the even part.
    const std::vector<double> deltas = {1e-2, 1e-3, 1e-4};
    std::vector<Eigen::MatrixXcd> F;
    std::vector<cd> t;
    for (double d : deltas) {
        const cd zp(z.real(), d), zm(z.real(), -d);
        Eigen::MatrixXcd up = fiber_resolvent(zp, xi, trunc) - projection_sum(zp, cutoff, xi, trunc);
        Eigen::MatrixXcd dn = fiber_resolvent(zm, xi, trunc) - projection_sum(zm, cutoff, xi, trunc);
        F.push_back(0.5 * (up + dn)); // even in delta: expand in delta^2
        t.push_back(cd(d * d, 0));
    }
    auto out = neville_to_zero(std::move(F), t);
    const double scale = std::max(1.0, out.value.norm());
    if (out.est_error > 1e-6 * scale && out.step_ratio > 0.5)
        throw NumericalError("remainder: axis extrapolation not converging (ratio " +
                             std::to_string(out.step_ratio) + ")");
    return out.value;
}

BoundaryExtrapolation remainder_boundary(double lambda, int side, const CutoffSpec& cutoff,
                                         double xi, const HermiteTruncation& trunc,
                                         const std::vector<double>& deltas) {
    if (side != 1 && side != -1) throw ValidationError("remainder_boundary: side must be +-1");
    if (!(lambda < cutoff.a)) throw ValidationError("remainder_boundary: lambda < a required");
    if (deltas.size() < 2) throw ValidationError("remainder_boundary: need >= 2 deltas");
    std::vector<Eigen::MatrixXcd> F;
    std::vector<cd> t;
    for (double d : deltas) {
        const cd zz(lambda, side * d);
        F.push_back(fiber_resolvent(zz, xi, trunc) - projection_sum(zz, cutoff, xi, trunc));
        t.push_back(cd(0, side * d)); // extrapolate analytically in the complex offset
    }
    auto out = neville_to_zero(std::move(F), t);
    BoundaryExtrapolation b;
    b.value = std::move(out.value);
    b.step_ratio = out.step_ratio;
    b.est_error = out.est_error;
    const double scale = std::max(1.0, b.value.norm());
    if (b.est_error > 1e-5 * scale && b.step_ratio > 0.6)
        throw NumericalError("remainder_boundary: delta sequence not converging");
    return b;
}

WeylSymbol weyl_symbol_of_projection(int k, double xi, const std::vector<double>& vgrid,
                                     const std::vector<double>& etagrid,
                                     const HermiteTruncation& trunc, const CutoffSpec& cutoff) {
    if (k < 0 || 2 * k > trunc.N) throw ValidationError("weyl_symbol_of_projection: k <= N/2");
    const double c = cutoff.chi(xi);
    const int nv = static_cast<int>(vgrid.size());
    const int ne = static_cast<int>(etagrid.size());

    WeylSymbol ws;
    ws.computed.resize(nv, ne);

    // y-integral of psi(v + y/2) psi(v - y/2) e^{-i y eta}: the integrand decays
    // like e^{-y^2/8}, so [-16, 16] puts the tail below 1e-13; trapezoid on an
    // analytic Gaussian converges spectrally in the step.
    const double Y = 16.0, h = 0.05;
    const int ny = static_cast<int>(std::lround(2 * Y / h)) + 1;
    std::vector<cd> left(ny), right(ny);
    for (int iv = 0; iv < nv; ++iv) {
        const double v = vgrid[iv];
        for (int iy = 0; iy < ny; ++iy) {
            const double y = -Y + iy * h;
            left[iy] = hermite_eval(k, cd(v + 0.5 * y, 2.0 * xi));
            right[iy] = hermite_eval(k, cd(v - 0.5 * y, 2.0 * xi));
        }
        for (int ie = 0; ie < ne; ++ie) {
            const double eta = etagrid[ie];
            cd sum = 0.0;
            for (int iy = 0; iy < ny; ++iy) {
                const double y = -Y + iy * h;
                sum += left[iy] * right[iy] * std::exp(cd(0, -y * eta));
            }
            ws.computed(iv, ie) = c * sum * h;
        }
    }

    if (k == 0) {
        ws.closed_form.resize(nv, ne);
        for (int iv = 0; iv < nv; ++iv)
            for (int ie = 0; ie < ne; ++ie) {
                const double v = vgrid[iv], eta = etagrid[ie];
                ws.closed_form(iv, ie) =
                    std::sqrt(2.0) * c *
                    std::exp(cd(-v * v - eta * eta + 2.0 * xi * xi, 2.0 * v * xi));
            }
        ws.max_closed_form_dev = (ws.computed - ws.closed_form).cwiseAbs().maxCoeff();
    }
    return ws;
}

Eigen::MatrixXcd fiber_semigroup(double t, double xi, const HermiteTruncation& trunc) {
    if (t < 0) throw ValidationError("fiber_semigroup: t >= 0 required");
    if (t == 0) return Eigen::MatrixXcd::Identity(trunc.N, trunc.N);
    const auto A = assemble_fiber(xi, trunc).entries;
    return (-t * A).exp();
}

std::vector<cd> fiber_eigenvalues(double xi, const HermiteTruncation& trunc) {
    const auto A = assemble_fiber(xi, trunc).entries;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw NumericalError("fiber_eigenvalues: eigensolver failed");
    std::vector<cd> ev(es.eigenvalues().data(), es.eigenvalues().data() + trunc.N);
    std::sort(ev.begin(), ev.end(), [](cd a, cd b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return ev;
}

qp::NewtonResult refined_fiber_eigenvalue(int l, double xi, const HermiteTruncation& trunc) {
    if (l < 0 || l >= trunc.N) throw ValidationError("refined_fiber_eigenvalue: 0 <= l < N");
    const qp::qcomplex anchor{qp::qreal(l) + qp::qreal(xi) * qp::qreal(xi), qp::qreal(0)};
    return qp::charpoly_newton(trunc.N, qp::qreal(xi), anchor);
}

} // namespace kfp
