#pragma once

#include "kfp/grid.hpp"
#include "kfp/hermite.hpp"
#include "kfp/potential.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace kfp {

// Dense operators on the truncated phase space.  States are (N x M) matrices
// (rows: velocity modes, cols: grid nodes); the flattened index is i*N + j for
// node i and mode j, which matches kron(X_x, A_v) block structure.

enum class DerivScheme { spectral, fd2 };

// Vectorize / restore a state in the flattened convention.
Eigen::VectorXcd flatten(const Eigen::MatrixXcd& state);
Eigen::MatrixXcd unflatten(const Eigen::VectorXcd& u, int N, int M);

// L^2 norm of a state: sqrt(h) * Frobenius norm (velocity modes orthonormal).
double state_norm(const Eigen::MatrixXcd& state, const Grid& grid);

// kron(X, A) for an x-side matrix X (M x M) and a velocity-side block A (N x N).
Eigen::MatrixXcd kron_xv(const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& A);

// Free operator: harmonic ladder in v plus transport v d/dx.
Eigen::MatrixXcd assemble_free(const HermiteTruncation& trunc, const Grid& grid,
                               DerivScheme scheme = DerivScheme::spectral);

// Coupling block -V'(x) d/dv (vanishes identically where V' does).
Eigen::MatrixXcd coupling_block(const HermiteTruncation& trunc, const Grid& grid,
                                const Potential& pot);

// Full operator: free part plus coupling.
Eigen::MatrixXcd assemble_full(const HermiteTruncation& trunc, const Grid& grid,
                               const Potential& pot, DerivScheme scheme = DerivScheme::spectral);

// Velocity parity (v -> -v): diagonal signs (-1)^j on the mode index.
Eigen::MatrixXcd parity_matrix(const HermiteTruncation& trunc, const Grid& grid);

// Dense matrix of a fiber multiplier: block-diagonal A(xi_m) on the frequency
// side, conjugated back to the grid side.
Eigen::MatrixXcd fourier_multiplier_matrix(const Grid& grid, int N,
                                           const std::function<Eigen::MatrixXcd(double)>& A);

// Same, from per-frequency blocks already in hand; blocks[m] pairs with
// grid.frequencies()[m].  Lets callers that derive several multipliers from
// one pass over the fibers avoid re-evaluating fiber data per multiplier.
Eigen::MatrixXcd fourier_multiplier_matrix(const Grid& grid, int N,
                                           const std::vector<Eigen::MatrixXcd>& blocks);

// Apply the same multiplier to a single state without forming the matrix.
Eigen::MatrixXcd apply_fourier_multiplier(const Eigen::MatrixXcd& state, const Grid& grid,
                                          const std::function<Eigen::MatrixXcd(double)>& A);

// Anisotropic weighted norms.  type "H": (2 - Lap_v + v^2 + <D_x>^{2/3})^{r/2}
// after <x>^s, with r a (possibly negative) even integer; type "G":
// (1 - Lap_v + v^2)^{r/2} after <x>^s, any real r.
struct WeightSpec {
    std::string type = "G"; // "H" or "G"
    double r = 0.0;
    double s = 0.0;
};

class WeightOperator {
public:
    WeightOperator(const WeightSpec& spec, const HermiteTruncation& trunc, const Grid& grid);

    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& state) const;
    double norm(const Eigen::MatrixXcd& state) const;
    const WeightSpec& spec() const { return spec_; }

private:
    WeightSpec spec_;
    const Grid* grid_;
    int N_;
    Eigen::VectorXd xweight_;    // <x_i>^s
    Eigen::MatrixXd lambda_v_;   // velocity block before the x-frequency shift
    // G-type: eigendecomposition of lambda_v_ for real powers.
    Eigen::MatrixXd evec_;
    Eigen::VectorXd epow_;
};

// Eigenvalues of a dense operator inside a disk, with eigenvectors and
// residuals.  Dimensions <= dense_cap use a full dense solve; larger ones a
// shift-inverted Krylov iteration centered on the disk.
struct EigenPair {
    std::complex<double> value;
    Eigen::VectorXcd vector;
    double residual; // ||P v - value v|| for the unit eigenvector
};

std::vector<EigenPair> discrete_spectrum(const Eigen::MatrixXcd& P, std::complex<double> center,
                                         double radius, int dense_cap = 10000,
                                         int krylov_count = 24);

// Observed constant in the maximal estimate: the max over seeded smooth states
// of (||(1 - Lap_v) u|| + ||(1 + v^2) u|| + ||<D_x>^{2/3} u||) / (||P0 u|| + ||u||).
struct SubellipticReport {
    double constant;
    std::vector<double> ratios;
};

SubellipticReport subelliptic_constant(const HermiteTruncation& trunc, const Grid& grid,
                                       int n_states = 100, unsigned seed = 2026);

} // namespace kfp
