#include "kfp/potential.hpp"
#include "kfp/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace kfp {

Potential Potential::make(const std::string& family, double g, double rho, const Grid& grid) {
    Potential p;
    p.family_ = family;
    p.g_ = g;
    const int M = grid.size();
    p.V_.resize(M);
    p.dV_.resize(M);
    if (family == "power_law") {
        if (!(rho > 0.0)) throw ValidationError("potential: power_law requires rho > 0");
        p.rho_ = rho;
        for (int i = 0; i < M; ++i) {
            const double x = grid.nodes()[i];
            const double b2 = 1.0 + x * x;
            p.V_[i] = g * std::pow(b2, -rho / 2.0);
            p.dV_[i] = -g * rho * x * std::pow(b2, -rho / 2.0 - 1.0);
        }
    } else if (family == "gaussian_bump") {
        p.rho_ = rho > 0.0 ? rho : 1.0;
        for (int i = 0; i < M; ++i) {
            const double x = grid.nodes()[i];
            p.V_[i] = g * std::exp(-x * x);
            p.dV_[i] = -2.0 * g * x * std::exp(-x * x);
        }
    } else {
        throw ValidationError("potential: unknown family '" + family + "'");
    }
    p.finish(grid);
    return p;
}

Potential Potential::from_file(const std::string& path, double rho, const Grid& grid) {
    if (!(rho > 0.0)) throw ValidationError("potential: sampled file requires rho > 0");
    std::ifstream in(path);
    if (!in) throw ValidationError("potential: cannot open '" + path + "'");
    std::vector<double> xs, vs, dvs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (auto& c : line)
            if (c == ',') c = ' ';
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first)) continue;
        if (first[0] == '#') continue;
        double x = 0, v = 0, dv = 0;
        try {
            x = std::stod(first);
        } catch (...) {
            throw ValidationError("potential: bad numeric field at line " + std::to_string(lineno));
        }
        if (!(ss >> v >> dv))
            throw ValidationError("potential: expected three columns (x, V, V') at line " +
                                  std::to_string(lineno));
        xs.push_back(x);
        vs.push_back(v);
        dvs.push_back(dv);
    }
    const int M = grid.size();
    if (static_cast<int>(xs.size()) != M)
        throw ValidationError("potential: sampled file has " + std::to_string(xs.size()) +
                              " rows, grid has " + std::to_string(M) + " nodes");
    for (int i = 1; i < M; ++i)
        if (!(xs[i] > xs[i - 1]))
            throw ValidationError("potential: sampled x column must be strictly increasing");
    for (int i = 0; i < M; ++i)
        if (std::abs(xs[i] - grid.nodes()[i]) > 1e-9)
            throw ValidationError("potential: sampled x column does not match the grid nodes");

    Potential p;
    p.family_ = "sampled";
    p.rho_ = rho;
    p.g_ = 1.0;
    p.V_ = Eigen::Map<Eigen::VectorXd>(vs.data(), M);
    p.dV_ = Eigen::Map<Eigen::VectorXd>(dvs.data(), M);
    p.finish(grid);
    return p;
}

void Potential::finish(const Grid& grid) {
    double C = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        const double b = std::sqrt(1.0 + grid.nodes()[i] * grid.nodes()[i]);
        const double lhs = std::abs(V_[i]) + b * std::abs(dV_[i]);
        C = std::max(C, lhs * std::pow(b, rho_));
    }
    C_ = C;
}

} // namespace kfp
