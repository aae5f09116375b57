#include "kfp/grid.hpp"
#include "kfp/errors.hpp"

#include <cmath>

namespace kfp {

Grid::Grid(const GridSpec& spec) : spec_(spec) {
    if (!(spec.x_min < 0.0 && 0.0 < spec.x_max))
        throw ValidationError("grid: window must contain the origin (x_min < 0 < x_max)");
    if (spec.M < 16) throw ValidationError("grid: at least 16 nodes required");
    if (spec.M % 2 != 0) throw ValidationError("grid: even node count required");
    M_ = spec.M;
    length_ = spec.x_max - spec.x_min;
    h_ = length_ / M_;
    x_.resize(M_);
    for (int i = 0; i < M_; ++i) x_[i] = spec.x_min + i * h_;
    freq_.resize(M_);
    const double dxi = 2.0 * M_PI / length_;
    for (int m = 0; m < M_; ++m) freq_[m] = dxi * (m - M_ / 2);

    F_.resize(M_, M_);
    Finv_.resize(M_, M_);
    for (int m = 0; m < M_; ++m) {
        for (int i = 0; i < M_; ++i) {
            const double phase = freq_[m] * x_[i];
            F_(m, i) = h_ * std::complex<double>(std::cos(phase), -std::sin(phase));
            Finv_(i, m) = (1.0 / length_) * std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
}

Eigen::MatrixXcd Grid::derivative_spectral() const {
    // The unpaired frequency keeps its one-sided multiplier: the matrix is
    // then complex but still exactly skew-adjoint, and matches per-fiber
    // assembly on every frequency slot.
    Eigen::VectorXcd mult(M_);
    for (int m = 0; m < M_; ++m) mult[m] = std::complex<double>(0.0, freq_[m]);
    return Finv_ * mult.asDiagonal() * F_;
}

Eigen::MatrixXcd Grid::derivative_fd() const {
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(M_, M_);
    const double c = 1.0 / (2.0 * h_);
    for (int i = 0; i < M_; ++i) {
        D(i, (i + 1) % M_) += c;
        D(i, (i + M_ - 1) % M_) -= c;
    }
    return D;
}

Eigen::VectorXd Grid::bracket_pow(double p) const {
    Eigen::VectorXd w(M_);
    for (int i = 0; i < M_; ++i) w[i] = std::pow(std::sqrt(1.0 + x_[i] * x_[i]), p);
    return w;
}

Eigen::MatrixXcd Grid::to_freq(const Eigen::MatrixXcd& state) const {
    if (state.cols() != M_) throw ValidationError("to_freq: state has wrong number of columns");
    return state * F_.transpose();
}

Eigen::MatrixXcd Grid::from_freq(const Eigen::MatrixXcd& hat) const {
    if (hat.cols() != M_) throw ValidationError("from_freq: state has wrong number of columns");
    return hat * Finv_.transpose();
}

} // namespace kfp
