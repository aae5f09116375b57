#pragma once

#include "kfp/fiber.hpp"
#include "kfp/grid.hpp"
#include "kfp/hermite.hpp"
#include "kfp/potential.hpp"

#include <string>
#include <vector>

namespace kfp {

// Experiment configuration: a single human-editable JSON document whose keys
// mirror the domain parameters one-to-one.  Missing keys take the defaults
// below; unknown keys anywhere in the document are rejected so that typos
// cannot silently change an experiment.
struct RunConfig {
    int dimension = 1;  // only the one-dimensional model is built
    int hermite_N = 32;

    struct GridBlock {
        double x_min = -8.0;
        double x_max = 8.0;
        int M = 32;
    } grid;

    struct PotentialBlock {
        std::string family = "power_law";  // or "gaussian_bump"
        double g = 0.05;
        double rho = 1.0;
        std::string file;  // nonempty: three-column (x, V, V') table overriding family
    } potential;

    struct WeightsBlock {
        double s = 0.6;
    } weights;

    struct CutoffBlock {
        int l = 1;
        double a = 1.5;
        double plateau_r = 2.0;
        double support_r = 2.5;
    } cutoff;

    struct ScanBlock {
        double lambda_min = 0.2;
        double lambda_max = 0.8;
        int steps = 25;
        double exclusion_radius = 0.05;
        double detection_threshold = 1e-6;
    } scan;

    std::vector<double> eps_sequence = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6};

    struct TolerancesBlock {
        double cauchy_final = 1e-3;      // last epsilon-difference must fall below this
        double path_agreement = 1e-4;    // kernel path vs extrapolation path
        double second_resolvent = 1e-6;  // perturbed-lap identity residual
        double commutation = 1e-6;       // observable-evolution residuals
        double idempotency = 1e-6;       // spectral projection certification
        double survival_cap = 1e-3;      // scan fine-discretization re-check
        double refine_trigger = 0.05;    // scan minima deeper than this get refined
        double conjugation_c0 = 0.05;    // weight-slope fraction in the decay report
        double conjugation_z = -1.0;     // resolvent point for the decay report
    } tolerances;

    std::string output_dir = "out";

    struct CacheBlock {
        bool enabled = false;
        std::string dir;  // empty: "<output_dir>/cache"
    } cache;

    // Constructing the domain objects re-runs every module-level precondition.
    Grid make_grid() const;
    HermiteTruncation make_truncation() const;
    CutoffSpec make_cutoff() const;
    Potential make_potential(const Grid& g) const;
};

// Parse and validate; throws ValidationError with the offending key path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical JSON echo of a config (fixed key order, round-trip exact floats):
// embedded in every summary so an artifact records its own provenance.
std::string config_to_json(const RunConfig& c);

} // namespace kfp
