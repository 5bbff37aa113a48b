// Experiment CLI: sample | se | run | verify | texture | dobrushin.
// Exit codes: 0 success, 1 validation error, 2 numerical divergence,
// 3 acceptance-threshold failure (verify only).

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "swamp/config.hpp"
#include "swamp/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"AMP with sliding-window MRF denoisers: experiment harness"};
    app.require_subcommand(1);

    std::string config_path, outdir = ".";
    std::int64_t seed_override = -1;
    int threads = 1;

    auto add_common = [&](CLI::App* sub, bool need_config = true) {
        auto* copt = sub->add_option("--config", config_path, "experiment config file (JSON)");
        if (need_config) copt->required();
        sub->add_option("--out", outdir, "output directory");
        sub->add_option("--seed", seed_override, "override master_seed");
        sub->add_option("--threads", threads, "worker threads (affects speed only)");
    };

    CLI::App* c_sample = app.add_subcommand("sample", "sample an MRF field to a grid file");
    CLI::App* c_se = app.add_subcommand("se", "run state evolution, emit CSV");
    CLI::App* c_run = app.add_subcommand("run", "full AMP pipeline over trials");
    CLI::App* c_verify = app.add_subcommand("verify", "compare empirical MSE to state evolution");
    CLI::App* c_texture = app.add_subcommand("texture", "reconstruct a binary image grid");
    CLI::App* c_dob = app.add_subcommand("dobrushin", "Dobrushin uniqueness coefficients");
    for (CLI::App* s : {c_sample, c_se, c_run, c_verify, c_texture, c_dob}) add_common(s);

    CLI11_PARSE(app, argc, argv);

    try {
        swamp::ExperimentConfig cfg = swamp::load_config(config_path);
        if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
        if (threads < 1) threads = 1;
        int rc = 0;
        if (c_sample->parsed()) rc = swamp::cmd_sample(cfg, outdir, threads);
        else if (c_se->parsed()) rc = swamp::cmd_se(cfg, outdir, threads);
        else if (c_run->parsed()) rc = swamp::cmd_run(cfg, outdir, threads);
        else if (c_verify->parsed()) rc = swamp::cmd_verify(cfg, outdir, threads);
        else if (c_texture->parsed()) rc = swamp::cmd_texture(cfg, outdir, threads);
        else if (c_dob->parsed()) rc = swamp::cmd_dobrushin(cfg, outdir, threads);
        if (rc == 3) std::cerr << "verify: acceptance thresholds not met\n";
        return rc;
    } catch (const swamp::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << " (iteration " << e.iteration << ")\n";
        return 2;
    } catch (const swamp::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
