#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "denoisers.hpp"
#include "lattice.hpp"
#include "measurement.hpp"
#include "state_evolution.hpp"
#include "util.hpp"

namespace swamp {

// The AMP recursion:
//   z^t      = y - A vec(beta^t) + (z^{t-1}/n) sum_i eta'_{t-1}
//   beta^{t+1}_i = eta_t([vec^{-1}(A^T z^t) + beta^t]_{Lambda_i})
// with beta^0 = 0, z^0 = y and the Onsager term omitted at t = 0.

enum class TauSource { state_evolution, empirical };

struct AmpState {
    int t = 0; // beta holds beta^t
    std::vector<double> beta;
    std::vector<double> z;
    std::vector<double> effective_obs; // vec^{-1}(A^T z^t) + beta^t
    double onsager_sum = 0.0;          // sum of eta'_t at the current effective obs
};

struct AmpConfig {
    int max_iters = 10;
    TauSource tau_source = TauSource::state_evolution;
    double stop_eps = 0.0;
    bool onsager_enabled = true; // ablation switch
};

struct AmpIterRecord {
    int t = 0;            // this row produced beta^{t+1}
    double tau2_used = 0.0;
    double mse = -1.0;    // vs beta_true, -1 when truth not supplied
    double onsager_sum = 0.0;
    double empirical_tau2 = 0.0; // ||z^t||^2 / n
};

struct AmpTrajectory {
    std::vector<AmpIterRecord> iters;
    std::vector<double> beta_final;
};

inline AmpState amp_init(const MeasurementModel& model, const std::vector<double>& y) {
    if (static_cast<long>(y.size()) != model.n) throw ValidationError("amp_init: shape mismatch");
    AmpState st;
    st.t = 0;
    st.beta.assign(model.signal_len, 0.0);
    st.z = y;
    return st;
}

// Residual update: z^t = y - A beta^t + (z^{t-1}/n) sum eta'_{t-1}; the
// Onsager term is omitted at t = 0 (no z^{-1}).
inline std::vector<double> amp_residual(const AmpState& state, const MeasurementModel& model,
                                        const std::vector<double>& y, int threads = 1,
                                        bool onsager_enabled = true) {
    std::vector<double> Ab = matvec(model.A, model.n, model.signal_len, state.beta, threads);
    std::vector<double> z(model.n);
    const double ons = (state.t > 0 && onsager_enabled)
                           ? state.onsager_sum / static_cast<double>(model.n)
                           : 0.0;
    for (long i = 0; i < model.n; ++i)
        z[i] = y[i] - Ab[i] + state.z[i] * ons;
    if (!all_finite(z)) throw DivergenceError("AMP residual diverged", state.t);
    return z;
}

// Denoising half of the step: effective observation then beta^{t+1}.
inline AmpState amp_denoise(const AmpState& state, std::vector<double> z,
                            const MeasurementModel& model, const DenoiserSpec& denoiser,
                            double tau_t, const LatticeShape& shape, int threads = 1) {
    const int t = state.t;
    AmpState next;
    next.t = t + 1;
    std::vector<double> corr = mat_t_vec(model.A, model.n, model.signal_len, z, threads);
    next.z = std::move(z);
    next.effective_obs.resize(model.signal_len);
    for (long i = 0; i < model.signal_len; ++i)
        next.effective_obs[i] = corr[i] + state.beta[i];
    if (!all_finite(next.effective_obs)) throw DivergenceError("AMP effective observation diverged", t);

    SignalField eff = devectorize(next.effective_obs, shape);
    const DenoiseResult dr = apply_denoiser(denoiser, eff, tau_t, threads,
                                            static_cast<std::uint64_t>(t));
    next.beta = dr.estimate.values;
    next.onsager_sum = dr.onsager_sum;
    if (!all_finite(next.beta) || !std::isfinite(next.onsager_sum))
        throw DivergenceError("AMP estimate diverged", t);
    return next;
}

// Advances the state one iteration.
inline AmpState amp_step(const AmpState& state, const MeasurementModel& model,
                         const std::vector<double>& y, const DenoiserSpec& denoiser,
                         double tau_t, const LatticeShape& shape, int threads = 1,
                         bool onsager_enabled = true) {
    std::vector<double> z = amp_residual(state, model, y, threads, onsager_enabled);
    return amp_denoise(state, std::move(z), model, denoiser, tau_t, shape, threads);
}

inline AmpTrajectory run_amp(const MeasurementModel& model, const std::vector<double>& y,
                             const DenoiserSpec& denoiser, const AmpConfig& config,
                             const LatticeShape& shape, const SeTrajectory* se = nullptr,
                             const SignalField* beta_true = nullptr, int threads = 1) {
    if (config.max_iters < 1) throw ValidationError("run_amp: max_iters must be >= 1");
    if (config.tau_source == TauSource::state_evolution) {
        if (!se) throw ValidationError("run_amp: tau_source=state_evolution needs a trajectory");
        if (static_cast<int>(se->tau2.size()) < config.max_iters)
            throw ValidationError("run_amp: SE trajectory shorter than max_iters");
    }
    AmpState st = amp_init(model, y);
    AmpTrajectory tr;
    for (int t = 0; t < config.max_iters; ++t) {
        std::vector<double> z = amp_residual(st, model, y, threads, config.onsager_enabled);
        double tau2;
        if (config.tau_source == TauSource::state_evolution) {
            tau2 = se->tau2[t];
        } else {
            double zz = 0.0;
            for (double v : z) zz += v * v;
            tau2 = zz / static_cast<double>(model.n); // empirical tau_t^2 from z^t
        }
        const std::vector<double> beta_prev = st.beta;
        st = amp_denoise(st, std::move(z), model, denoiser, std::sqrt(tau2), shape, threads);
        AmpIterRecord rec;
        rec.t = t;
        rec.tau2_used = tau2;
        rec.onsager_sum = st.onsager_sum;
        double zz = 0.0;
        for (double v : st.z) zz += v * v;
        rec.empirical_tau2 = zz / static_cast<double>(model.n);
        if (beta_true) {
            double m = 0.0;
            for (long i = 0; i < model.signal_len; ++i) {
                const double d = st.beta[i] - beta_true->values[i];
                m += d * d;
            }
            rec.mse = m / static_cast<double>(model.signal_len);
        }
        tr.iters.push_back(rec);
        double diff = 0.0;
        for (long i = 0; i < model.signal_len; ++i) {
            const double d = st.beta[i] - beta_prev[i];
            diff += d * d;
        }
        if (config.stop_eps > 0.0 && diff / static_cast<double>(model.signal_len) < config.stop_eps)
            break;
    }
    tr.beta_final = st.beta;
    return tr;
}

} // namespace swamp
