#pragma once
// Evolution by the free semigroup: per-fiber propagation with Fourier
// synthesis, observable-evolution identities, smoothing integrals, and the
// projection-sum bound with its closed-form majorant.
#include <Eigen/Core>
#include <complex>
#include <functional>
#include <vector>

#include "kfp/fiber.hpp"
#include "kfp/grid.hpp"
#include "kfp/hermite.hpp"

namespace kfp {

// Identity checks use cosh/sinh of the elapsed time; 10 keeps them
// well-conditioned at double precision.
inline constexpr double kEvolveTMax = 10.0;

struct EvolutionPlan {
    enum class Method { eigen, scaling_squaring };
    std::vector<double> times;    // increasing checkpoints within [0, kEvolveTMax]
    std::vector<double> xi_grid;  // fiber samples for integral diagnostics
    Method method = Method::scaling_squaring;
};

void validate_plan(const EvolutionPlan& plan);

// e^{-t A(xi)} on one fiber, by scaling-and-squaring or by
// eigendecomposition of the fiber matrix.
Eigen::MatrixXcd fiber_evolution(double t, double xi, const HermiteTruncation& trunc,
                                 EvolutionPlan::Method method);

// Apply the semigroup at time t to a modes-by-nodes state.
Eigen::MatrixXcd evolve(double t, const Eigen::MatrixXcd& state, const HermiteTruncation& trunc,
                        const Grid& grid, const EvolutionPlan& plan = {});

// Same propagator applied to several states, sharing the per-fiber
// exponentials (the dominant cost).
std::vector<Eigen::MatrixXcd> evolve_many(double t, const std::vector<Eigen::MatrixXcd>& states,
                                          const HermiteTruncation& trunc, const Grid& grid,
                                          const EvolutionPlan& plan = {});

enum class Observable { v, dv, x };

// Elementary observables on modes-by-nodes states: multiplication by v,
// velocity derivative, multiplication by x.
Eigen::MatrixXcd apply_observable(Observable obs, const Eigen::MatrixXcd& state,
                                  const HermiteTruncation& trunc, const Grid& grid);

// Spectral x-derivative (Fourier multiplier by i xi).
Eigen::MatrixXcd apply_dx(const Eigen::MatrixXcd& state, const Grid& grid);

// Smooth rapidly-decaying test states: Gaussian bumps at a few phase-space
// centers, normalized, well separated from the window edge.
std::vector<Eigen::MatrixXcd> default_test_states(const HermiteTruncation& trunc,
                                                  const Grid& grid);

// Max relative residual, over the test states, of the observable-evolution
// identity that moves Obs across the semigroup:
//   evolve(t-s) Obs evolve(s)  =  evolve(t) (combination of v, d_v, d_x, x).
double commutation_check(double t, double s, Observable obs,
                         const std::vector<Eigen::MatrixXcd>& test_states,
                         const HermiteTruncation& trunc, const Grid& grid,
                         const EvolutionPlan& plan = {});

// ||(A(xi)+1)^{k+1} \int_0^T e^{-tA(xi)} theta(t) dt|| maximized over xi_grid.
// For k >= 1 theta must vanish at 0 through order k; the order is certified
// numerically before integrating (k = 0 needs no vanishing: contraction
// semigroups smooth one order unconditionally).  `panels` sets the dyadic
// composite Gauss rule refined toward t = 0.
double smoothing_integral(const std::function<double(double)>& theta, int k, double T,
                          const HermiteTruncation& trunc, const std::vector<double>& xi_grid,
                          int panels = 12);

// ||(A(xi)+1)^k e^{-t A(xi)}||: the frequency-tail diagnostic.
double semigroup_power_norm(double t, double xi, int k, const HermiteTruncation& trunc);

struct ProjectionSumBound {
    double lhs = 0;    // truncated sum of e^{-t(l+xi^2)} ||Pi_l^xi||
    double rhs = 0;    // closed-form majorant
    double slack = 0;  // rhs - lhs (nonnegative when the bound holds)
};

// Left side truncated at l = L (each dropped term is positive, so the
// truncated sum is a lower bound) against the closed-form right side.
ProjectionSumBound projection_sum_bound(double t, double xi, int L,
                                        const HermiteTruncation& trunc);

} // namespace kfp
