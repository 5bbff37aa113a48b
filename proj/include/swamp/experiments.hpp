#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "amp.hpp"
#include "config.hpp"
#include "denoisers.hpp"
#include "grid_io.hpp"
#include "measurement.hpp"
#include "metrics.hpp"
#include "mrf.hpp"
#include "state_evolution.hpp"
#include "svg.hpp"
#include "util.hpp"

namespace swamp {

// Experiment orchestration behind the CLI subcommands. Every output file
// embeds the resolved config; CSV/JSON writes are atomic.

inline std::uint64_t derive_seed(std::uint64_t master, const char* purpose, std::uint64_t trial) {
    return Rng::stream(master, purpose, trial).next_u64();
}

inline DenoiserSpec make_denoiser_spec(const ExperimentConfig& c) {
    DenoiserSpec spec;
    spec.kind = c.denoiser_kind();
    spec.window = c.window();
    if (spec.kind == DenoiserKind::total_variation) {
        spec.tv_lambda = c.tv_lambda;
        spec.tv_iters = c.tv_iters;
    } else {
        spec.prior = window_marginal(c.mrf, c.dim, c.k);
    }
    return spec;
}

// Deterministic noise variance for state evolution: the per-measurement
// signal power concentrates on sigma_beta^2/delta per measurement row, so
// sigma^2 = sigma_beta^2 / (delta * 10^(snr/10)).
inline double se_noise_sigma2(const WindowDistribution& prior, double delta_eff, double snr_db) {
    const double sb2 = se_init(prior, 1.0);
    return sb2 / (delta_eff * std::pow(10.0, snr_db / 10.0));
}

inline double effective_delta(const ExperimentConfig& c) {
    const long total = c.shape().size();
    const long n = static_cast<long>(c.delta * total);
    if (n < 1) throw ValidationError("delta too small: n < 1");
    return static_cast<double>(n) / static_cast<double>(total);
}

inline SeTrajectory run_se_for_config(const ExperimentConfig& c, const DenoiserSpec& spec,
                                      int threads) {
    const double de = effective_delta(c);
    const double s2 = se_noise_sigma2(spec.prior, de, c.snr_db);
    return run_se(spec.prior, spec, c.shape(), spec.window, de, s2, c.max_iters, c.mc_samples,
                  derive_seed(c.master_seed, "se", 0), threads);
}

struct TrialResult {
    AmpTrajectory traj;
    SignalField truth;
    double sigma2 = 0.0;
};

inline TrialResult run_trial(const ExperimentConfig& c, const DenoiserSpec& spec,
                             const SeTrajectory* se, int trial, int threads,
                             bool onsager_enabled = true) {
    const LatticeShape shape = c.shape();
    TrialResult tr;
    tr.truth = sample_field(c.mrf, shape, derive_seed(c.master_seed, "field", trial));
    MeasurementModel model =
        make_model(shape, c.delta, derive_seed(c.master_seed, "matrix", trial), threads);
    tr.sigma2 = calibrate_noise(model.A, model.n, model.signal_len, tr.truth, c.snr_db);
    const std::vector<double> y = measure(model.A, model.n, model.signal_len, tr.truth, tr.sigma2,
                                          derive_seed(c.master_seed, "noise", trial), threads);
    AmpConfig ac;
    ac.max_iters = c.max_iters;
    ac.tau_source =
        c.tau_source == "state_evolution" ? TauSource::state_evolution : TauSource::empirical;
    ac.stop_eps = c.stop_eps;
    ac.onsager_enabled = onsager_enabled;
    tr.traj = run_amp(model, y, spec, ac, shape, se, &tr.truth, threads);
    return tr;
}

// --- sample ---------------------------------------------------------------

inline int cmd_sample(const ExperimentConfig& c, const std::string& outdir, int threads) {
    (void)threads;
    c.validate();
    std::filesystem::create_directories(outdir);
    GridFile g;
    g.shape = c.shape();
    g.params = c.mrf;
    g.seed = c.master_seed;
    g.config = config_line(c);
    g.values = sample_field(c.mrf, g.shape, derive_seed(c.master_seed, "field", 0)).values;
    write_grid(outdir + "/sample.grid", g);
    return 0;
}

// --- se --------------------------------------------------------------------

inline int cmd_se(const ExperimentConfig& c, const std::string& outdir, int threads) {
    c.validate();
    if (c.denoiser_kind() == DenoiserKind::total_variation)
        throw ValidationError("se command requires a Bayesian denoiser");
    std::filesystem::create_directories(outdir);
    const DenoiserSpec spec = make_denoiser_spec(c);
    const SeTrajectory tr = run_se_for_config(c, spec, threads);
    std::ostringstream out;
    out << "# config " << config_line(c) << "\n";
    out << "t,sigma2,tau2,converged\n";
    for (std::size_t t = 0; t < tr.sigma2.size(); ++t)
        out << t << "," << format_double(tr.sigma2[t]) << "," << format_double(tr.tau2[t]) << ","
            << (tr.converged_at >= 0 && static_cast<int>(t) >= tr.converged_at ? 1 : 0) << "\n";
    write_file_atomic(outdir + "/se.csv", out.str());
    return 0;
}

// --- run -------------------------------------------------------------------

inline int cmd_run(const ExperimentConfig& c, const std::string& outdir, int threads) {
    c.validate();
    std::filesystem::create_directories(outdir);
    const DenoiserSpec spec = make_denoiser_spec(c);
    SeTrajectory se;
    const bool use_se = c.tau_source == "state_evolution";
    if (use_se) {
        if (c.denoiser_kind() == DenoiserKind::total_variation)
            throw ValidationError("tau_source=state_evolution requires a Bayesian denoiser");
        se = run_se_for_config(c, spec, threads);
    }
    std::ostringstream out;
    out << "# config " << config_line(c) << "\n";
    out << "trial,t,mse,tau2_used,empirical_tau2,onsager_sum\n";
    std::vector<TrialSummary> summaries;
    for (int trial = 0; trial < c.trials; ++trial) {
        const TrialResult tr =
            run_trial(c, spec, use_se ? &se : nullptr, trial, threads);
        TrialSummary ts;
        ts.seed = derive_seed(c.master_seed, "field", trial);
        for (const auto& rec : tr.traj.iters) {
            ts.losses.push_back(rec.mse);
            out << trial << "," << rec.t + 1 << "," << format_double(rec.mse) << ","
                << format_double(rec.tau2_used) << "," << format_double(rec.empirical_tau2) << ","
                << format_double(rec.onsager_sum) << "\n";
        }
        summaries.push_back(ts);
        GridFile g;
        g.shape = c.shape();
        g.params = c.mrf;
        g.seed = c.master_seed;
        g.config = config_line(c);
        g.values = tr.traj.beta_final;
        write_grid(outdir + "/recon_trial" + std::to_string(trial) + ".grid", g);
        if (trial == 0) {
            g.values = tr.truth.values;
            write_grid(outdir + "/truth_trial0.grid", g);
        }
    }
    write_file_atomic(outdir + "/run.csv", out.str());

    std::ostringstream agg;
    agg << "# config " << config_line(c) << "\n";
    agg << "t,mean_mse,stddev_mse" << (use_se ? ",se_pred,rel_dev" : "") << "\n";
    const std::size_t T = summaries[0].losses.size();
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> vals;
        for (const auto& s : summaries)
            if (t < s.losses.size()) vals.push_back(s.losses[t]);
        const double mean = pairwise_sum(vals) / vals.size();
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / vals.size());
        agg << t + 1 << "," << format_double(mean) << "," << format_double(sd);
        if (use_se) {
            const double pred = effective_delta(c) * se.sigma2[t + 1];
            agg << "," << format_double(pred) << ","
                << format_double(pred != 0 ? std::fabs(mean - pred) / pred : 0.0);
        }
        agg << "\n";
    }
    write_file_atomic(outdir + "/aggregate.csv", agg.str());
    return 0;
}

// --- verify ----------------------------------------------------------------

inline int cmd_verify(const ExperimentConfig& c, const std::string& outdir, int threads) {
    c.validate();
    if (c.denoiser_kind() == DenoiserKind::total_variation)
        throw ValidationError("verify requires a Bayesian denoiser");
    std::filesystem::create_directories(outdir);
    const DenoiserSpec spec = make_denoiser_spec(c);
    const SeTrajectory se = run_se_for_config(c, spec, threads);
    std::vector<TrialSummary> summaries;
    for (int trial = 0; trial < c.trials; ++trial) {
        const TrialResult tr = run_trial(c, spec, &se, trial, threads);
        TrialSummary ts;
        ts.seed = derive_seed(c.master_seed, "field", trial);
        for (const auto& rec : tr.traj.iters) ts.losses.push_back(rec.mse);
        summaries.push_back(ts);
    }
    const double de = effective_delta(c);
    const ConcentrationReport rep = concentration_report(summaries, se, de);

    bool pass = true;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : rep.rows) {
        const double tol = r.t == 0 ? 0.15 : 0.10; // row 0 holds beta^1
        const bool ok = r.rel_dev <= tol;
        pass = pass && ok;
        rows.push_back({{"t", r.t + 1},
                        {"mean_mse", r.mean},
                        {"stddev_mse", r.stddev},
                        {"se_pred", r.se_pred},
                        {"rel_dev", r.rel_dev},
                        {"tolerance", tol},
                        {"frac_in_band", r.frac_in_band},
                        {"pass", ok}});
    }
    nlohmann::ordered_json j;
    j["config"] = config_to_json(c);
    j["delta_effective"] = de;
    j["se_sigma2"] = se.sigma2;
    j["rows"] = rows;
    j["pass"] = pass;
    write_file_atomic(outdir + "/verify.json", j.dump(2) + "\n");

    SvgSeries emp{"empirical mean MSE", "#d62728", {}, {}, true};
    SvgSeries pred{"state evolution", "#1f77b4", {}, {}, false};
    for (const auto& r : rep.rows) {
        emp.x.push_back(r.t + 1);
        emp.y.push_back(r.mean);
        pred.x.push_back(r.t + 1);
        pred.y.push_back(r.se_pred);
    }
    write_file_atomic(outdir + "/verify.svg",
                      svg_line_plot({pred, emp}, "Empirical MSE vs state evolution", "iteration",
                                    "MSE"));
    return pass ? 0 : 3;
}

// --- texture ---------------------------------------------------------------

inline int cmd_texture(const ExperimentConfig& c, const std::string& outdir, int threads) {
    c.validate();
    if (c.input_grid.empty()) throw ValidationError("texture requires input_grid in the config");
    std::filesystem::create_directories(outdir);
    GridFile in = read_grid(c.input_grid);
    if (in.shape.dim != 2) throw ValidationError("texture requires a 2D input grid");
    SignalField truth(in.shape);
    truth.values = in.values;
    if (c.threshold_input) {
        double mean = 0.0;
        for (double v : truth.values) mean += v;
        mean /= truth.values.size();
        for (double& v : truth.values) v = v > mean ? 1.0 : 0.0;
    } else {
        for (double v : truth.values)
            if (v != 0.0 && v != 1.0)
                throw ValidationError("texture input must be binary (or set threshold_input)");
    }

    const LatticeShape shape = in.shape;
    MeasurementModel model =
        make_model(shape, c.delta, derive_seed(c.master_seed, "matrix", 0), threads);
    const double sigma2 = calibrate_noise(model.A, model.n, model.signal_len, truth, c.snr_db);
    const std::vector<double> y = measure(model.A, model.n, model.signal_len, truth, sigma2,
                                          derive_seed(c.master_seed, "noise", 0), threads);
    const double de = static_cast<double>(model.n) / model.signal_len;

    struct Run {
        std::string name;
        DenoiserSpec spec;
        bool use_se;
    };
    std::vector<Run> runs;
    {
        ExperimentConfig cw = c;
        cw.denoiser = "bayes_window";
        Run rw{"bayes_window", make_denoiser_spec(cw), true};
        runs.push_back(rw);
        ExperimentConfig cs = c;
        cs.denoiser = "bayes_separable";
        cs.k = 0;
        cs.mask.clear();
        Run rs{"bayes_separable", make_denoiser_spec(cs), true};
        runs.push_back(rs);
        ExperimentConfig ct = c;
        ct.denoiser = "total_variation";
        Run rt{"total_variation", make_denoiser_spec(ct), false};
        runs.push_back(rt);
    }

    std::ostringstream csv;
    csv << "# config " << config_line(c) << "\n";
    csv << "denoiser,t,mse,tau2_used\n";
    std::vector<SignalField> panel{truth};
    std::vector<std::string> titles{"input"};
    for (auto& run : runs) {
        AmpConfig ac;
        ac.max_iters = c.max_iters;
        ac.stop_eps = c.stop_eps;
        SeTrajectory se;
        if (run.use_se) {
            ac.tau_source = TauSource::state_evolution;
            se = run_se(run.spec.prior, run.spec, shape, run.spec.window, de, sigma2,
                        c.max_iters, c.mc_samples, derive_seed(c.master_seed, "se", 0), threads);
        } else {
            ac.tau_source = TauSource::empirical;
        }
        const AmpTrajectory traj =
            run_amp(model, y, run.spec, ac, shape, run.use_se ? &se : nullptr, &truth, threads);
        for (const auto& rec : traj.iters)
            csv << run.name << "," << rec.t + 1 << "," << format_double(rec.mse) << ","
                << format_double(rec.tau2_used) << "\n";
        GridFile g;
        g.shape = shape;
        g.params = c.mrf;
        g.seed = c.master_seed;
        g.config = config_line(c);
        g.values = traj.beta_final;
        write_grid(outdir + "/texture_" + run.name + ".grid", g);
        SignalField recon(shape);
        recon.values = traj.beta_final;
        panel.push_back(recon);
        titles.push_back(run.name);
    }
    write_file_atomic(outdir + "/texture.csv", csv.str());
    write_file_atomic(outdir + "/texture.svg", svg_heatmap_panel(panel, titles));
    GridFile g;
    g.shape = shape;
    g.params = c.mrf;
    g.seed = c.master_seed;
    g.config = config_line(c);
    g.values = truth.values;
    write_grid(outdir + "/texture_input.grid", g);
    return 0;
}

// --- dobrushin ---------------------------------------------------------------

inline int cmd_dobrushin(const ExperimentConfig& c, const std::string& outdir, int threads) {
    (void)threads;
    c.mrf.validate();
    std::filesystem::create_directories(outdir);
    double dc = 0.0, dcs = 0.0;
    std::vector<double> per_offset;
    dobrushin_coefficients(c.mrf, dc, dcs, &per_offset);
    nlohmann::ordered_json j;
    j["config"] = config_to_json(c);
    j["c"] = dc;
    j["c_star"] = dcs;
    j["per_neighbor"] = per_offset;
    j["pass"] = dc < 1.0 && dcs < 1.0;
    write_file_atomic(outdir + "/dobrushin.json", j.dump(2) + "\n");
    return 0;
}

} // namespace swamp
