#pragma once

#include <Eigen/Dense>

namespace kfp {

// Uniform periodic grid on [x_min, x_max): nodes x_i = x_min + i h with
// h = (x_max - x_min) / M.  Dual frequencies xi_m = 2 pi m / length for
// m in [-M/2, M/2), stored in ascending order.
struct GridSpec {
    double x_min = -20.0;
    double x_max = 20.0;
    int M = 128;
};

class Grid {
public:
    explicit Grid(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    int size() const { return M_; }
    double step() const { return h_; }
    double length() const { return length_; }

    const Eigen::VectorXd& nodes() const { return x_; }
    const Eigen::VectorXd& frequencies() const { return freq_; }

    // Dense discrete Fourier transform pair, normalized as a quadrature of
    // the continuum transform: (F u)(m) = h * sum_i e^{-i xi_m x_i} u(x_i),
    // (Finv w)(i) = (1/length) * sum_m e^{+i xi_m x_i} w(m), so Finv F = I
    // exactly in exact arithmetic.
    const Eigen::MatrixXcd& forward() const { return F_; }
    const Eigen::MatrixXcd& inverse() const { return Finv_; }

    // Spectral derivative matrix Finv diag(i xi) F (skew-adjoint; complex
    // because the unpaired highest frequency keeps its one-sided multiplier).
    Eigen::MatrixXcd derivative_spectral() const;
    // Second-order central difference with periodic wrap.
    Eigen::MatrixXcd derivative_fd() const;

    // <x_i>^p as a vector, <x> = sqrt(1 + x^2).
    Eigen::VectorXd bracket_pow(double p) const;

    // Transform a state matrix (rows = v-modes, cols = x-nodes) to and from
    // the frequency side; columns of the result index frequencies.
    Eigen::MatrixXcd to_freq(const Eigen::MatrixXcd& state) const;
    Eigen::MatrixXcd from_freq(const Eigen::MatrixXcd& hat) const;

private:
    GridSpec spec_;
    int M_;
    double h_, length_;
    Eigen::VectorXd x_, freq_;
    Eigen::MatrixXcd F_, Finv_;
};

} // namespace kfp
