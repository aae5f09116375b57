#pragma once

#include "kfp/grid.hpp"

#include <Eigen/Dense>

#include <string>

namespace kfp {

// Long-range potential V(x) on the grid, with its derivative supplied
// analytically (families) or tabulated (sampled files).  Admissibility
// requires |V| + <x>|V'| <= C <x>^{-rho} with rho > 0; the smallest such C
// over the grid window is recorded for diagnostics.
class Potential {
public:
    // family "power_law": V = g <x>^{-rho};  family "gaussian_bump":
    // V = g exp(-x^2) (rho is ignored; any decay rate is admissible).
    static Potential make(const std::string& family, double g, double rho, const Grid& grid);

    // Three whitespace/comma-separated columns x, V, V': the x column must
    // match the grid nodes to 1e-9.
    static Potential from_file(const std::string& path, double rho, const Grid& grid);

    const std::string& family() const { return family_; }
    double coupling() const { return g_; }
    double rho() const { return rho_; }
    double admissibility_constant() const { return C_; }

    const Eigen::VectorXd& values() const { return V_; }      // V(x_i)
    const Eigen::VectorXd& derivative() const { return dV_; } // V'(x_i)

private:
    Potential() = default;
    void finish(const Grid& grid);

    std::string family_;
    double g_ = 0.0, rho_ = 0.0, C_ = 0.0;
    Eigen::VectorXd V_, dV_;
};

} // namespace kfp
