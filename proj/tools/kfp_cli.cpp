#include "kfp/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Spectral and decay diagnostics for a kinetic Fokker-Planck operator"};
    app.require_subcommand(1);

    struct SubState {
        CLI::App* sub = nullptr;
        std::string config_path;
        std::string out_dir;
        int threads = 0;
        bool verbose = false;
    };
    std::vector<SubState> subs(kfp::command_names().size());
    static const std::vector<std::string> descriptions = {
        "Fiber eigenvalues against the exact ladder l + xi^2",
        "Weighted free boundary values: epsilon paths, Cauchy rates, flags",
        "Characteristic-value scan with refinement and verification",
        "Two-sided boundary classification at the scan midpoint",
        "Perturbed boundary values: second-resolvent identity and continuity",
        "Rate function, conjugation margins, decay fit, moment table",
        "Observable-evolution residual table plus contraction checks",
        "Smoothing integrals, divergence trend, projection-sum majorant",
    };
    for (size_t i = 0; i < kfp::command_names().size(); ++i) {
        auto& st = subs[i];
        st.sub = app.add_subcommand(kfp::command_names()[i], descriptions[i]);
        st.sub->add_option("--config", st.config_path, "JSON config file (omit for defaults)");
        st.sub->add_option("--out", st.out_dir, "output directory (overrides config)");
        st.sub->add_option("--threads", st.threads, "worker threads for scans (0 = hardware)");
        st.sub->add_flag("--verbose", st.verbose, "print artifact paths");
    }

    CLI11_PARSE(app, argc, argv);

    for (size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i].sub->parsed()) continue;
        kfp::RunOptions opt;
        opt.out_dir = subs[i].out_dir;
        opt.threads = subs[i].threads;
        opt.verbose = subs[i].verbose;
        const kfp::RunResult result =
            kfp::run_from_files(kfp::command_names()[i], subs[i].config_path, opt);
        if (opt.verbose || result.exit_code != 0)
            for (const auto& path : result.artifacts) std::printf("%s\n", path.c_str());
        return result.exit_code;
    }
    return 1;
}
