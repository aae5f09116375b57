#include "kfp/config.hpp"

#include "kfp/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace kfp {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw ValidationError("config: unknown key \"" + where + item.key() + "\"");
}

double get_num(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ValidationError("config: \"" + where + key + "\" must be a number");
    return v.get<double>();
}

int get_int(const json& j, const char* key, int fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer())
        throw ValidationError("config: \"" + where + key + "\" must be an integer");
    return v.get<int>();
}

std::string get_str(const json& j, const char* key, const std::string& fallback,
                    const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_string()) throw ValidationError("config: \"" + where + key + "\" must be a string");
    return v.get<std::string>();
}

bool get_bool(const json& j, const char* key, bool fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) throw ValidationError("config: \"" + where + key + "\" must be a boolean");
    return v.get<bool>();
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");

    RunConfig c;
    reject_unknown(j, {"dimension", "hermite_N", "grid", "potential", "weights", "cutoff",
                       "scan", "eps_sequence", "tolerances", "output_dir", "cache"},
                   "");

    c.dimension = get_int(j, "dimension", c.dimension, "");
    if (c.dimension != 1)
        throw ValidationError("config: only dimension = 1 is built");
    c.hermite_N = get_int(j, "hermite_N", c.hermite_N, "");
    if (c.hermite_N < 4 || c.hermite_N > 512)
        throw ValidationError("config: hermite_N must lie in [4, 512]");

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        if (!g.is_object()) throw ValidationError("config: \"grid\" must be an object");
        reject_unknown(g, {"x_min", "x_max", "M"}, "grid.");
        c.grid.x_min = get_num(g, "x_min", c.grid.x_min, "grid.");
        c.grid.x_max = get_num(g, "x_max", c.grid.x_max, "grid.");
        c.grid.M = get_int(g, "M", c.grid.M, "grid.");
    }

    if (j.contains("potential")) {
        const auto& p = j.at("potential");
        if (!p.is_object()) throw ValidationError("config: \"potential\" must be an object");
        reject_unknown(p, {"family", "g", "rho", "file"}, "potential.");
        c.potential.family = get_str(p, "family", c.potential.family, "potential.");
        c.potential.g = get_num(p, "g", c.potential.g, "potential.");
        c.potential.rho = get_num(p, "rho", c.potential.rho, "potential.");
        c.potential.file = get_str(p, "file", c.potential.file, "potential.");
    }

    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        if (!w.is_object()) throw ValidationError("config: \"weights\" must be an object");
        reject_unknown(w, {"s"}, "weights.");
        c.weights.s = get_num(w, "s", c.weights.s, "weights.");
    }
    if (!(c.weights.s > 0.5))
        throw ValidationError("config: weights.s must exceed 1/2");

    if (j.contains("cutoff")) {
        const auto& k = j.at("cutoff");
        if (!k.is_object()) throw ValidationError("config: \"cutoff\" must be an object");
        reject_unknown(k, {"l", "a", "plateau_r", "support_r"}, "cutoff.");
        c.cutoff.l = get_int(k, "l", c.cutoff.l, "cutoff.");
        c.cutoff.a = get_num(k, "a", c.cutoff.a, "cutoff.");
        c.cutoff.plateau_r = get_num(k, "plateau_r", c.cutoff.plateau_r, "cutoff.");
        c.cutoff.support_r = get_num(k, "support_r", c.cutoff.support_r, "cutoff.");
    }

    if (j.contains("scan")) {
        const auto& s = j.at("scan");
        if (!s.is_object()) throw ValidationError("config: \"scan\" must be an object");
        reject_unknown(s, {"lambda_min", "lambda_max", "steps", "exclusion_radius",
                           "detection_threshold"},
                       "scan.");
        c.scan.lambda_min = get_num(s, "lambda_min", c.scan.lambda_min, "scan.");
        c.scan.lambda_max = get_num(s, "lambda_max", c.scan.lambda_max, "scan.");
        c.scan.steps = get_int(s, "steps", c.scan.steps, "scan.");
        c.scan.exclusion_radius = get_num(s, "exclusion_radius", c.scan.exclusion_radius, "scan.");
        c.scan.detection_threshold =
            get_num(s, "detection_threshold", c.scan.detection_threshold, "scan.");
    }
    if (!(c.scan.lambda_min > 0.0) || !(c.scan.lambda_max > c.scan.lambda_min))
        throw ValidationError("config: scan range must satisfy 0 < lambda_min < lambda_max");
    if (c.scan.steps < 2 || c.scan.steps > 4096)
        throw ValidationError("config: scan.steps must lie in [2, 4096]");
    if (!(c.scan.exclusion_radius > 0.0) || !(c.scan.exclusion_radius < 0.5))
        throw ValidationError("config: scan.exclusion_radius must lie in (0, 0.5)");
    if (!(c.scan.detection_threshold > 0.0))
        throw ValidationError("config: scan.detection_threshold must be positive");

    if (j.contains("eps_sequence")) {
        const auto& e = j.at("eps_sequence");
        if (!e.is_array()) throw ValidationError("config: \"eps_sequence\" must be an array");
        c.eps_sequence.clear();
        for (const auto& v : e) {
            if (!v.is_number())
                throw ValidationError("config: eps_sequence entries must be numbers");
            c.eps_sequence.push_back(v.get<double>());
        }
    }
    if (c.eps_sequence.size() < 2)
        throw ValidationError("config: eps_sequence needs at least two offsets");
    for (size_t i = 0; i < c.eps_sequence.size(); ++i) {
        if (!(c.eps_sequence[i] > 0.0) || !std::isfinite(c.eps_sequence[i]))
            throw ValidationError("config: eps_sequence must be positive and finite");
        if (i > 0 && !(c.eps_sequence[i] < c.eps_sequence[i - 1]))
            throw ValidationError("config: eps_sequence must be strictly decreasing");
    }

    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        if (!t.is_object()) throw ValidationError("config: \"tolerances\" must be an object");
        reject_unknown(t, {"cauchy_final", "path_agreement", "second_resolvent", "commutation",
                           "idempotency", "survival_cap", "refine_trigger", "conjugation_c0",
                           "conjugation_z"},
                       "tolerances.");
        auto& tb = c.tolerances;
        tb.cauchy_final = get_num(t, "cauchy_final", tb.cauchy_final, "tolerances.");
        tb.path_agreement = get_num(t, "path_agreement", tb.path_agreement, "tolerances.");
        tb.second_resolvent = get_num(t, "second_resolvent", tb.second_resolvent, "tolerances.");
        tb.commutation = get_num(t, "commutation", tb.commutation, "tolerances.");
        tb.idempotency = get_num(t, "idempotency", tb.idempotency, "tolerances.");
        tb.survival_cap = get_num(t, "survival_cap", tb.survival_cap, "tolerances.");
        tb.refine_trigger = get_num(t, "refine_trigger", tb.refine_trigger, "tolerances.");
        tb.conjugation_c0 = get_num(t, "conjugation_c0", tb.conjugation_c0, "tolerances.");
        tb.conjugation_z = get_num(t, "conjugation_z", tb.conjugation_z, "tolerances.");
        for (double v : {tb.cauchy_final, tb.path_agreement, tb.second_resolvent, tb.commutation,
                         tb.idempotency, tb.survival_cap, tb.refine_trigger})
            if (!(v > 0.0) || !std::isfinite(v))
                throw ValidationError("config: tolerances must be positive and finite");
        if (!(tb.conjugation_c0 >= 0.0))
            throw ValidationError("config: tolerances.conjugation_c0 must be non-negative");
        if (!(tb.conjugation_z < 0.0))
            throw ValidationError("config: tolerances.conjugation_z must be negative "
                                  "(resolvent point left of the spectrum)");
    }

    c.output_dir = get_str(j, "output_dir", c.output_dir, "");
    if (c.output_dir.empty()) throw ValidationError("config: output_dir must be nonempty");

    if (j.contains("cache")) {
        const auto& k = j.at("cache");
        if (!k.is_object()) throw ValidationError("config: \"cache\" must be an object");
        reject_unknown(k, {"enabled", "dir"}, "cache.");
        c.cache.enabled = get_bool(k, "enabled", c.cache.enabled, "cache.");
        c.cache.dir = get_str(k, "dir", c.cache.dir, "cache.");
    }
    if (c.cache.enabled && c.cache.dir.empty()) c.cache.dir = c.output_dir + "/cache";

    // Re-run the module-level preconditions now, not at first use.
    const Grid g = c.make_grid();
    (void)c.make_truncation();
    (void)c.make_cutoff();
    (void)c.make_potential(g);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open \"" + path + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Grid RunConfig::make_grid() const { return Grid(GridSpec{grid.x_min, grid.x_max, grid.M}); }

HermiteTruncation RunConfig::make_truncation() const { return HermiteTruncation(hermite_N); }

CutoffSpec RunConfig::make_cutoff() const {
    return CutoffSpec(cutoff.l, cutoff.a, cutoff.plateau_r, cutoff.support_r);
}

Potential RunConfig::make_potential(const Grid& g) const {
    if (!potential.file.empty()) return Potential::from_file(potential.file, potential.rho, g);
    return Potential::make(potential.family, potential.g, potential.rho, g);
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["dimension"] = c.dimension;
    j["hermite_N"] = c.hermite_N;
    j["grid"] = {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"M", c.grid.M}};
    j["potential"] = {{"family", c.potential.family},
                      {"g", c.potential.g},
                      {"rho", c.potential.rho},
                      {"file", c.potential.file}};
    j["weights"] = {{"s", c.weights.s}};
    j["cutoff"] = {{"l", c.cutoff.l},
                   {"a", c.cutoff.a},
                   {"plateau_r", c.cutoff.plateau_r},
                   {"support_r", c.cutoff.support_r}};
    j["scan"] = {{"lambda_min", c.scan.lambda_min},
                 {"lambda_max", c.scan.lambda_max},
                 {"steps", c.scan.steps},
                 {"exclusion_radius", c.scan.exclusion_radius},
                 {"detection_threshold", c.scan.detection_threshold}};
    j["eps_sequence"] = c.eps_sequence;
    j["tolerances"] = {{"cauchy_final", c.tolerances.cauchy_final},
                       {"path_agreement", c.tolerances.path_agreement},
                       {"second_resolvent", c.tolerances.second_resolvent},
                       {"commutation", c.tolerances.commutation},
                       {"idempotency", c.tolerances.idempotency},
                       {"survival_cap", c.tolerances.survival_cap},
                       {"refine_trigger", c.tolerances.refine_trigger},
                       {"conjugation_c0", c.tolerances.conjugation_c0},
                       {"conjugation_z", c.tolerances.conjugation_z}};
    j["output_dir"] = c.output_dir;
    j["cache"] = {{"enabled", c.cache.enabled}, {"dir", c.cache.dir}};
    return j.dump(2);
}

} // namespace kfp
