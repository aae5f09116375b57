#include "kfp/fullop.hpp"

#include "kfp/errors.hpp"
#include "kfp/linalg.hpp"

#include <cmath>
#include <utility>

namespace kfp {

Eigen::VectorXcd flatten(const Eigen::MatrixXcd& state) {
    // Column-major (N x M) storage already is the i*N + j order.
    return Eigen::Map<const Eigen::VectorXcd>(state.data(), state.size());
}

Eigen::MatrixXcd unflatten(const Eigen::VectorXcd& u, int N, int M) {
    if (u.size() != static_cast<Eigen::Index>(N) * M)
        throw ValidationError("unflatten: size mismatch");
    return Eigen::Map<const Eigen::MatrixXcd>(u.data(), N, M);
}

double state_norm(const Eigen::MatrixXcd& state, const Grid& grid) {
    return std::sqrt(grid.step()) * state.norm();
}

Eigen::MatrixXcd kron_xv(const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& A) {
    const int M = static_cast<int>(X.rows());
    const int N = static_cast<int>(A.rows());
    if (X.cols() != M || A.cols() != N) throw ValidationError("kron_xv: square blocks required");
    Eigen::MatrixXcd T(static_cast<Eigen::Index>(M) * N, static_cast<Eigen::Index>(M) * N);
    for (int ip = 0; ip < M; ++ip)
        for (int i = 0; i < M; ++i)
            T.block(static_cast<Eigen::Index>(i) * N, static_cast<Eigen::Index>(ip) * N, N, N) =
                X(i, ip) * A;
    return T;
}

namespace {

Eigen::MatrixXcd x_derivative(const Grid& grid, DerivScheme scheme) {
    return scheme == DerivScheme::spectral ? grid.derivative_spectral() : grid.derivative_fd();
}

} // namespace

Eigen::MatrixXcd assemble_free(const HermiteTruncation& trunc, const Grid& grid,
                               DerivScheme scheme) {
    const int N = trunc.N;
    const int M = grid.size();
    Eigen::MatrixXcd ladder = Eigen::MatrixXcd::Zero(N, N);
    for (int j = 0; j < N; ++j) ladder(j, j) = j;
    Eigen::MatrixXcd P = kron_xv(Eigen::MatrixXcd::Identity(M, M), ladder);
    P += kron_xv(x_derivative(grid, scheme), trunc.v_matrix().cast<std::complex<double>>());
    return P;
}

Eigen::MatrixXcd coupling_block(const HermiteTruncation& trunc, const Grid& grid,
                                const Potential& pot) {
    const int M = grid.size();
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(M, M);
    for (int i = 0; i < M; ++i) D(i, i) = -pot.derivative()[i];
    return kron_xv(D, trunc.dv_matrix().cast<std::complex<double>>());
}

Eigen::MatrixXcd assemble_full(const HermiteTruncation& trunc, const Grid& grid,
                               const Potential& pot, DerivScheme scheme) {
    return assemble_free(trunc, grid, scheme) + coupling_block(trunc, grid, pot);
}

Eigen::MatrixXcd parity_matrix(const HermiteTruncation& trunc, const Grid& grid) {
    const int N = trunc.N;
    const int M = grid.size();
    Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(N) * M,
                                                static_cast<Eigen::Index>(N) * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j)
            J(static_cast<Eigen::Index>(i) * N + j, static_cast<Eigen::Index>(i) * N + j) =
                (j % 2 == 0) ? 1.0 : -1.0;
    return J;
}

Eigen::MatrixXcd fourier_multiplier_matrix(const Grid& grid, int N,
                                           const std::function<Eigen::MatrixXcd(double)>& A) {
    const int M = grid.size();
    std::vector<Eigen::MatrixXcd> blocks(M);
    for (int m = 0; m < M; ++m) blocks[m] = A(grid.frequencies()[m]);
    return fourier_multiplier_matrix(grid, N, blocks);
}

Eigen::MatrixXcd fourier_multiplier_matrix(const Grid& grid, int N,
                                           const std::vector<Eigen::MatrixXcd>& blocks) {
    const int M = grid.size();
    if (static_cast<int>(blocks.size()) != M)
        throw ValidationError("fourier_multiplier_matrix: need one fiber block per frequency");
    for (int m = 0; m < M; ++m) {
        if (blocks[m].rows() != N || blocks[m].cols() != N)
            throw ValidationError("fourier_multiplier_matrix: fiber block has wrong size");
    }
    const Eigen::MatrixXcd& F = grid.forward();
    const Eigen::MatrixXcd& Fi = grid.inverse();
    Eigen::MatrixXcd T(static_cast<Eigen::Index>(M) * N, static_cast<Eigen::Index>(M) * N);
    Eigen::VectorXcd a(M);
    Eigen::MatrixXcd B(M, M);
    for (int j = 0; j < N; ++j) {
        for (int jp = 0; jp < N; ++jp) {
            for (int m = 0; m < M; ++m) a[m] = blocks[m](j, jp);
            B.noalias() = Fi * (a.asDiagonal() * F);
            for (int ip = 0; ip < M; ++ip)
                for (int i = 0; i < M; ++i)
                    T(static_cast<Eigen::Index>(i) * N + j,
                      static_cast<Eigen::Index>(ip) * N + jp) = B(i, ip);
        }
    }
    return T;
}

Eigen::MatrixXcd apply_fourier_multiplier(const Eigen::MatrixXcd& state, const Grid& grid,
                                          const std::function<Eigen::MatrixXcd(double)>& A) {
    Eigen::MatrixXcd hat = grid.to_freq(state);
    for (int m = 0; m < grid.size(); ++m) hat.col(m) = A(grid.frequencies()[m]) * hat.col(m);
    return grid.from_freq(hat);
}

WeightOperator::WeightOperator(const WeightSpec& spec, const HermiteTruncation& trunc,
                               const Grid& grid)
    : spec_(spec), grid_(&grid), N_(trunc.N) {
    if (spec.type != "H" && spec.type != "G")
        throw ValidationError("weights: type must be 'H' or 'G'");
    xweight_ = grid.bracket_pow(spec.s);

    const Eigen::MatrixXd& V = trunc.v_matrix();
    Eigen::MatrixXd ladder = Eigen::MatrixXd::Zero(N_, N_);
    for (int j = 0; j < N_; ++j) ladder(j, j) = j;
    // 1 - Lap_v + v^2 compressed: diag(j) + 3/2 + (3/4) v^2.
    lambda_v_ = ladder + 1.5 * Eigen::MatrixXd::Identity(N_, N_) + 0.75 * V * V;
    if (spec.type == "H") {
        const double k = spec.r / 2.0;
        if (std::abs(k - std::round(k)) > 1e-12)
            throw ValidationError("weights: H-type requires an even integer r");
        // H-type carries one more unit plus the <D_x>^{2/3} shift, added on the
        // frequency side during apply.
        lambda_v_ += Eigen::MatrixXd::Identity(N_, N_);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lambda_v_);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw NumericalError("weights: velocity block not positive definite");
        evec_ = es.eigenvectors();
        epow_ = es.eigenvalues().array().pow(spec.r / 2.0).matrix();
    }
}

Eigen::MatrixXcd WeightOperator::apply(const Eigen::MatrixXcd& state) const {
    if (state.rows() != N_ || state.cols() != grid_->size())
        throw ValidationError("weights: state has wrong shape");
    // <x>^s first, then the velocity/frequency factor.
    Eigen::MatrixXcd w = state * xweight_.asDiagonal();
    if (spec_.r == 0.0) return w;
    if (spec_.type == "G") {
        Eigen::MatrixXcd Wv =
            (evec_ * epow_.asDiagonal() * evec_.transpose()).cast<std::complex<double>>();
        return Wv * w;
    }
    const int k = static_cast<int>(std::lround(spec_.r / 2.0));
    Eigen::MatrixXcd hat = grid_->to_freq(w);
    for (int m = 0; m < grid_->size(); ++m) {
        const double xi = grid_->frequencies()[m];
        const double shift = std::cbrt(1.0 + xi * xi);
        Eigen::MatrixXd B = lambda_v_ + shift * Eigen::MatrixXd::Identity(N_, N_);
        if (k > 0) {
            const Eigen::MatrixXcd Bc = B.cast<std::complex<double>>();
            for (int p = 0; p < k; ++p) hat.col(m) = Bc * hat.col(m);
        } else {
            Eigen::LLT<Eigen::MatrixXd> llt(B);
            for (int p = 0; p < -k; ++p) {
                Eigen::VectorXd re = llt.solve(hat.col(m).real());
                Eigen::VectorXd im = llt.solve(hat.col(m).imag());
                for (int j = 0; j < N_; ++j) hat(j, m) = std::complex<double>(re[j], im[j]);
            }
        }
    }
    return grid_->from_freq(hat);
}

double WeightOperator::norm(const Eigen::MatrixXcd& state) const {
    return state_norm(apply(state), *grid_);
}

std::vector<EigenPair> discrete_spectrum(const Eigen::MatrixXcd& P, std::complex<double> center,
                                         double radius, int dense_cap, int krylov_count) {
    const int n = static_cast<int>(P.cols());
    if (n == 0 || P.rows() != n) throw ValidationError("discrete_spectrum: square matrix required");
    if (!(radius > 0)) throw ValidationError("discrete_spectrum: radius must be positive");
    std::vector<EigenPair> out;
    if (n <= dense_cap) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(P, true);
        for (int i = 0; i < n; ++i) {
            const std::complex<double> lam = es.eigenvalues()(i);
            if (std::abs(lam - center) > radius) continue;
            EigenPair ep;
            ep.value = lam;
            ep.vector = es.eigenvectors().col(i).normalized();
            ep.residual = (P * ep.vector - lam * ep.vector).norm();
            out.push_back(std::move(ep));
        }
    } else {
        for (const auto& rp : eigs_near_shift(P, center, krylov_count, 4 * krylov_count)) {
            if (std::abs(rp.value - center) > radius) continue;
            if (rp.residual > 1e-6) continue;
            out.push_back(EigenPair{rp.value, rp.vector, rp.residual});
        }
    }
    std::sort(out.begin(), out.end(), [&](const EigenPair& a, const EigenPair& b) {
        return std::abs(a.value - center) < std::abs(b.value - center);
    });
    return out;
}

SubellipticReport subelliptic_constant(const HermiteTruncation& trunc, const Grid& grid,
                                       int n_states, unsigned seed) {
    const int N = trunc.N;
    const int M = grid.size();
    const Eigen::MatrixXd& V = trunc.v_matrix();
    Eigen::MatrixXd ladder = Eigen::MatrixXd::Zero(N, N);
    for (int j = 0; j < N; ++j) ladder(j, j) = j;
    const Eigen::MatrixXcd lapv =
        (ladder + 1.5 * Eigen::MatrixXd::Identity(N, N) - 0.25 * V * V)
            .cast<std::complex<double>>();                        // 1 - Lap_v
    const Eigen::MatrixXcd vsq =
        (Eigen::MatrixXd::Identity(N, N) + V * V).cast<std::complex<double>>(); // 1 + v^2
    const Eigen::MatrixXcd Vc = V.cast<std::complex<double>>();
    const Eigen::MatrixXcd Dx = grid.derivative_spectral().transpose(); // right-multiplied

    SubellipticReport rep;
    rep.constant = 0.0;
    for (int k = 0; k < n_states; ++k) {
        // Smooth rapidly decaying state, built on the frequency side.
        Eigen::MatrixXcd hat = unflatten(seeded_vector(N * M, seed + 977 * k), N, M);
        for (int m = 0; m < M; ++m) {
            const double xi = grid.frequencies()[m];
            const double damp = std::exp(-xi * xi / 16.0);
            for (int j = 0; j < N; ++j) hat(j, m) *= damp * std::exp(-j / 3.0);
        }
        Eigen::MatrixXcd u = grid.from_freq(hat);
        const double nu = state_norm(u, grid);
        if (nu == 0.0) continue;

        Eigen::MatrixXcd p0u = ladder.cast<std::complex<double>>() * u + Vc * (u * Dx);
        Eigen::MatrixXcd hatu = grid.to_freq(u);
        for (int m = 0; m < M; ++m) {
            const double xi = grid.frequencies()[m];
            hatu.col(m) *= std::cbrt(1.0 + xi * xi);
        }
        const double lhs = state_norm(lapv * u, grid) + state_norm(vsq * u, grid) +
                           state_norm(grid.from_freq(hatu), grid);
        const double rhs = state_norm(p0u, grid) + nu;
        rep.ratios.push_back(lhs / rhs);
        rep.constant = std::max(rep.constant, lhs / rhs);
    }
    return rep;
}

} // namespace kfp
