#pragma once

#include "kfp/grid.hpp"
#include "kfp/hermite.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace kfp {

// Eigenfunction-decay verification: the rate function tau(z) built from
// weighted resolvent norms, the conjugated-operator margin that certifies an
// exponential weight, shell-based decay-rate fitting, and polynomial-moment
// diagnostics.

// The three operator norms entering tau, plus the value itself:
// tau = min( (n_vdv + n_vx + n_r0)^{-1}, n_r0^{-1/2} ).
struct TauParts {
    double n_vdv;  // || v d/dv R0(z) ||
    double n_vx;   // || v (x/<x>) R0(z) ||
    double n_r0;   // || R0(z) ||
    double value;
};

// pre: dist(z, [0, infinity)) >= 1e-4.
TauParts tau_parts(std::complex<double> z, const HermiteTruncation& trunc, const Grid& grid);
double tau(std::complex<double> z, const HermiteTruncation& trunc, const Grid& grid);

// The conjugation generator at weight slope a and cutoff scale r:
//   Q_r = a ( 4 chi_r'(v^2) v d/dv + (d^2/dv^2)[chi_r(v^2)]
//             - a (d/dv[chi_r(v^2)])^2 - chi_r'(<x>) v x/<x> )
// with chi_r(s) = r chi(s/r); chi(s) = s below r, constant plateau 3r/2 above
// 2r, quintic smoothstep between.  Real matrix on the (node, mode) layout.
Eigen::MatrixXd conjugation_generator(double a, double r, const HermiteTruncation& trunc,
                                      const Grid& grid);

// || Q_r R0(z) || at a = c0 tau(z).
// pre: r >= 1, c0 >= 0, r within the resolved window (x and v reach).
double conjugation_check(std::complex<double> z, double c0, double r,
                         const HermiteTruncation& trunc, const Grid& grid);

// Scalar cutoff pieces, exposed so tests can pin the calculus.
double chi_plateau(double s);        // chi itself
double chi_plateau_d1(double s);     // chi'
double chi_plateau_d2(double s);     // chi''

struct MomentRow {
    double s = 0.0;
    double norm = 0.0;               // || (<x> + <v>)^s u ||
    double boundary_fraction = 0.0;  // share contributed by the outermost x nodes
    bool window_dominated = false;   // boundary_fraction > 0.5
};

struct DecayReport {
    std::complex<double> eigenvalue{0.0, 0.0};
    double fitted_rate = 0.0;     // c in |u| ~ e^{-c (<x> + v^2)}
    double fit_quality = 0.0;     // R^2 of the shell fit
    double tau_value = 0.0;
    double conjugation_margin = 0.0;
    bool non_decaying = false;    // fitted rate indistinguishable from zero
    int shells_used = 0;
    std::vector<double> shell_phase;   // <x> + v^2 at shell centers
    std::vector<double> shell_logmax;  // log of the shell maximum of |u|
    std::vector<MomentRow> moment_table;
    std::string flags;
};

// Least-squares fit of log(shell max |u|) against the phase <x> + v^2.
// The state is an (N x M) coefficient matrix (modes x nodes); shells below
// the 1e-12 amplitude floor are excluded from the fit.  pre: u != 0 (the
// rate is scale-invariant; the input is normalized internally).
DecayReport decay_fit(const Eigen::MatrixXcd& u, const Grid& grid,
                      const HermiteTruncation& trunc);

// Weighted norms || (<x> + <v>)^s u || for each s, with window-domination
// flags.  pre: s_list finite and strictly increasing.
std::vector<MomentRow> moment_growth(const Eigen::MatrixXcd& u, const Grid& grid,
                                     const HermiteTruncation& trunc,
                                     const std::vector<double>& s_list);

} // namespace kfp
