#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "denoisers.hpp"
#include "lattice.hpp"
#include "mrf.hpp"
#include "util.hpp"

namespace swamp {

// One config file fully determines an experiment.

struct ExperimentConfig {
    int dim = 2;
    long N = 64;
    MrfParams mrf;
    int k = 1;
    std::vector<char> mask; // empty = full window
    double delta = 0.5;
    double snr_db = 17.0;
    std::string denoiser = "bayes_window"; // bayes_window | bayes_separable | total_variation
    double tv_lambda = 0.0;
    int tv_iters = 50;
    int max_iters = 10;
    int trials = 20;
    long mc_samples = 20000;
    std::uint64_t master_seed = 1;
    std::string tau_source = "state_evolution"; // state_evolution | empirical
    double stop_eps = 0.0;
    std::string input_grid;      // texture command: path to the input grid
    bool threshold_input = false; // texture command: global-mean threshold first

    bool operator==(const ExperimentConfig&) const = default;

    LatticeShape shape() const { return LatticeShape{dim, N}; }
    WindowSpec window() const { return WindowSpec{k, mask}; }

    DenoiserKind denoiser_kind() const {
        if (denoiser == "bayes_window") return DenoiserKind::bayes_window;
        if (denoiser == "bayes_separable") return DenoiserKind::bayes_separable;
        if (denoiser == "total_variation") return DenoiserKind::total_variation;
        throw ValidationError("unknown denoiser kind: " + denoiser);
    }

    void validate() const {
        std::vector<std::string> errs;
        auto need = [&](bool ok, const std::string& msg) {
            if (!ok) errs.push_back(msg);
        };
        need(dim >= 1 && dim <= 3, "dim must be in {1,2,3}");
        need(N >= 1, "N must be >= 1");
        for (double v : {mrf.p, mrf.q, mrf.r, mrf.s})
            if (!(v > 0.0 && v < 1.0)) {
                errs.push_back("MRF parameters must lie strictly in (0,1)");
                break;
            }
        need(k >= 0 && 2L * k + 1 <= N, "window must satisfy 0 <= k and 2k+1 <= N");
        if (!mask.empty()) {
            long d = 1;
            for (int i = 0; i < dim; ++i) d *= 2L * k + 1;
            need(static_cast<long>(mask.size()) == d, "mask length must be (2k+1)^dim");
            if (static_cast<long>(mask.size()) == d) need(mask[d / 2], "mask must include the center");
        }
        need(delta > 0.0 && delta <= 1.0, "delta must be in (0,1]");
        need(std::isfinite(snr_db), "snr_db must be finite");
        need(denoiser == "bayes_window" || denoiser == "bayes_separable" ||
                 denoiser == "total_variation",
             "denoiser must be bayes_window, bayes_separable or total_variation");
        if (denoiser == "bayes_separable") need(k == 0, "bayes_separable requires k = 0");
        if (denoiser == "total_variation") {
            need(dim == 2, "total_variation requires dim = 2");
            need(tv_lambda >= 0.0, "tv_lambda must be >= 0");
            need(tv_iters >= 1, "tv_iters must be >= 1");
        }
        need(max_iters >= 1, "max_iters must be >= 1");
        need(trials >= 1, "trials must be >= 1");
        need(mc_samples >= 1, "mc_samples must be >= 1");
        need(tau_source == "state_evolution" || tau_source == "empirical",
             "tau_source must be state_evolution or empirical");
        need(stop_eps >= 0.0, "stop_eps must be >= 0");
        if (!errs.empty()) {
            std::string all = "invalid config:";
            for (const auto& e : errs) all += "\n  - " + e;
            throw ValidationError(all);
        }
    }
};

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["lattice"] = {{"dim", c.dim}, {"N", c.N}};
    j["mrf"] = {{"p", c.mrf.p}, {"q", c.mrf.q}, {"r", c.mrf.r}, {"s", c.mrf.s}};
    j["window"] = {{"k", c.k}};
    if (!c.mask.empty()) {
        std::vector<int> m(c.mask.begin(), c.mask.end());
        j["window"]["mask"] = m;
    }
    j["delta"] = c.delta;
    j["snr_db"] = c.snr_db;
    j["denoiser"] = {{"kind", c.denoiser}, {"tv_lambda", c.tv_lambda}, {"tv_iters", c.tv_iters}};
    j["max_iters"] = c.max_iters;
    j["trials"] = c.trials;
    j["mc_samples"] = c.mc_samples;
    j["master_seed"] = c.master_seed;
    j["tau_source"] = c.tau_source;
    j["stop_eps"] = c.stop_eps;
    if (!c.input_grid.empty()) j["input_grid"] = c.input_grid;
    if (c.threshold_input) j["threshold_input"] = true;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        c.dim = j.at("lattice").at("dim").get<int>();
        c.N = j.at("lattice").at("N").get<long>();
        c.mrf.p = j.at("mrf").at("p").get<double>();
        c.mrf.q = j.at("mrf").at("q").get<double>();
        c.mrf.r = j.at("mrf").at("r").get<double>();
        c.mrf.s = j.at("mrf").at("s").get<double>();
        c.k = j.at("window").at("k").get<int>();
        if (j.at("window").contains("mask")) {
            auto m = j.at("window").at("mask").get<std::vector<int>>();
            c.mask.assign(m.begin(), m.end());
        }
        c.delta = j.at("delta").get<double>();
        c.snr_db = j.at("snr_db").get<double>();
        c.denoiser = j.at("denoiser").at("kind").get<std::string>();
        if (j.at("denoiser").contains("tv_lambda"))
            c.tv_lambda = j.at("denoiser").at("tv_lambda").get<double>();
        if (j.at("denoiser").contains("tv_iters"))
            c.tv_iters = j.at("denoiser").at("tv_iters").get<int>();
        c.max_iters = j.at("max_iters").get<int>();
        c.trials = j.at("trials").get<int>();
        c.mc_samples = j.at("mc_samples").get<long>();
        c.master_seed = j.at("master_seed").get<std::uint64_t>();
        c.tau_source = j.at("tau_source").get<std::string>();
        c.stop_eps = j.at("stop_eps").get<double>();
        if (j.contains("input_grid")) c.input_grid = j.at("input_grid").get<std::string>();
        if (j.contains("threshold_input")) c.threshold_input = j.at("threshold_input").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("invalid config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

inline std::string serialize_config(const ExperimentConfig& c) {
    return config_to_json(c).dump(2) + "\n";
}

// single-line form used when embedding the resolved config in outputs
inline std::string config_line(const ExperimentConfig& c) { return config_to_json(c).dump(); }

} // namespace swamp
