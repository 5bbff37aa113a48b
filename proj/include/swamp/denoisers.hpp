#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lattice.hpp"
#include "mrf.hpp"
#include "rng.hpp"
#include "util.hpp"

namespace swamp {

// Denoiser contract (value + center-coordinate derivative) and the three
// implementations: exact Bayesian sliding-window posterior mean, separable
// Bayesian (k=0), and a total-variation baseline.

enum class DenoiserKind { bayes_window, bayes_separable, total_variation };

// Precomputed tables for the Bayesian window posterior. With binary
// configurations the Gaussian likelihood exponent separates as
// (v.x - |x|/2)/tau^2 up to an x-independent constant, so each config's
// score needs one dot product, computed for all 2^d configs at once by a
// subset-sum recursion.
struct WindowPosterior {
    int d = 0;
    long nconf = 0;
    int center = 0;
    std::vector<double> logmu;     // log prior, zero-probability -> -1e300
    std::vector<double> half_wsum; // (masked popcount)/2 per config
    std::vector<char> mask;        // length d, 1 = cell contributes likelihood

    double posterior_p1(const double* patch, double tau) const {
        if (!(tau > 0.0)) throw ValidationError("invalid noise level: tau must be > 0");
        const double inv_t2 = 1.0 / (tau * tau);
        thread_local std::vector<double> dot, score;
        dot.resize(nconf);
        score.resize(nconf);
        dot[0] = 0.0;
        score[0] = logmu[0];
        double mx = score[0];
        for (long x = 1; x < nconf; ++x) {
            const int b = std::countr_zero(static_cast<unsigned long>(x));
            const double vb = mask[b] ? patch[b] : 0.0;
            dot[x] = dot[x & (x - 1)] + vb;
            score[x] = (dot[x] - half_wsum[x]) * inv_t2 + logmu[x];
            mx = std::max(mx, score[x]);
        }
        double s_all = 0.0, s_one = 0.0;
        const long cbit = 1L << center;
        for (long x = 0; x < nconf; ++x) {
            const double e = std::exp(score[x] - mx);
            s_all += e;
            if (x & cbit) s_one += e;
        }
        if (!(s_all > 0.0)) throw Error("degenerate likelihood in window posterior");
        return s_one / s_all;
    }
};

inline WindowPosterior make_posterior(const WindowDistribution& prior,
                                      const std::vector<char>& mask = {}) {
    WindowPosterior wp;
    wp.d = static_cast<int>(prior.d);
    wp.nconf = 1L << wp.d;
    if (static_cast<long>(prior.probs.size()) != wp.nconf)
        throw ValidationError("prior support size must be 2^|window|");
    wp.center = wp.d / 2;
    wp.mask.assign(wp.d, 1);
    if (!mask.empty()) {
        if (static_cast<int>(mask.size()) != wp.d)
            throw ValidationError("mask length does not match window");
        if (!mask[wp.center]) throw ValidationError("mask must include the center cell");
        wp.mask = mask;
    }
    wp.logmu.resize(wp.nconf);
    wp.half_wsum.resize(wp.nconf);
    for (long x = 0; x < wp.nconf; ++x) {
        wp.logmu[x] = prior.probs[x] > 0.0 ? std::log(prior.probs[x]) : -1e300;
        int cnt = 0;
        for (int b = 0; b < wp.d; ++b)
            if (wp.mask[b] && (x >> b & 1)) ++cnt;
        wp.half_wsum[x] = 0.5 * cnt;
    }
    return wp;
}

inline double bayes_window_denoise(const WindowPatch& patch, double tau,
                                   const WindowPosterior& wp) {
    if (static_cast<int>(patch.size()) != wp.d)
        throw ValidationError("patch length does not match prior window");
    return wp.posterior_p1(patch.data(), tau);
}

// d eta / d v_center = Var(beta_c | v)/tau^2 = p(1-p)/tau^2 for binary priors.
inline double bayes_window_derivative(const WindowPatch& patch, double tau,
                                      const WindowPosterior& wp) {
    const double p = bayes_window_denoise(patch, tau, wp);
    return p * (1.0 - p) / (tau * tau);
}

struct DenoiserSpec {
    DenoiserKind kind = DenoiserKind::bayes_window;
    WindowSpec window;
    WindowDistribution prior; // Bayesian kinds
    double tv_lambda = 0.0;   // TV: effective threshold is tv_lambda * tau
    int tv_iters = 50;

    void validate(const LatticeShape& shape) const {
        window.validate(shape);
        if (kind == DenoiserKind::bayes_separable && window.half_width != 0)
            throw ValidationError("separable denoiser requires k = 0");
        if (kind == DenoiserKind::total_variation) {
            if (shape.dim != 2) throw ValidationError("TV denoiser requires dim = 2");
            if (tv_lambda < 0.0 || tv_iters < 1) throw ValidationError("bad TV options");
        } else {
            const long d = window.cells(shape.dim);
            if (static_cast<long>(prior.probs.size()) != (1L << d))
                throw ValidationError("prior support size must be 2^|window|");
        }
    }
};

struct DenoiseResult {
    SignalField estimate;
    double onsager_sum = 0.0;
};

// Isotropic TV prox via the accelerated dual projected-gradient scheme
// (fixed iteration count, deterministic).
inline SignalField tv_denoise(const SignalField& image, double lam, int iters) {
    if (image.shape.dim != 2) throw ValidationError("tv_denoise requires dim = 2");
    if (iters < 1) throw ValidationError("tv_denoise requires iters >= 1");
    if (lam <= 0.0) return image;
    const long N = image.shape.side;
    const std::vector<double>& b = image.values;
    std::vector<double> p1(N * N, 0.0), p2(N * N, 0.0);
    std::vector<double> r1 = p1, r2 = p2, u(N * N);
    double t = 1.0;
    auto at = [N](long i, long j) { return i * N + j; };
    for (int it = 0; it < iters; ++it) {
        // u = b + lam * div(r)
        for (long i = 0; i < N; ++i)
            for (long j = 0; j < N; ++j) {
                double dv = r1[at(i, j)] + r2[at(i, j)];
                if (i > 0) dv -= r1[at(i - 1, j)];
                if (j > 0) dv -= r2[at(i, j - 1)];
                u[at(i, j)] = b[at(i, j)] + lam * dv;
            }
        // gradient step + pointwise projection onto |p| <= 1
        const double step = 1.0 / (8.0 * lam);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double mom = (t - 1.0) / tn;
        for (long i = 0; i < N; ++i)
            for (long j = 0; j < N; ++j) {
                const double g1 = (i + 1 < N) ? u[at(i + 1, j)] - u[at(i, j)] : 0.0;
                const double g2 = (j + 1 < N) ? u[at(i, j + 1)] - u[at(i, j)] : 0.0;
                const double q1 = r1[at(i, j)] + step * g1;
                const double q2 = r2[at(i, j)] + step * g2;
                const double nrm = std::max(1.0, std::sqrt(q1 * q1 + q2 * q2));
                const double np1 = q1 / nrm, np2 = q2 / nrm;
                r1[at(i, j)] = np1 + mom * (np1 - p1[at(i, j)]);
                r2[at(i, j)] = np2 + mom * (np2 - p2[at(i, j)]);
                p1[at(i, j)] = np1;
                p2[at(i, j)] = np2;
            }
        t = tn;
    }
    SignalField out(image.shape);
    for (long i = 0; i < N; ++i)
        for (long j = 0; j < N; ++j) {
            double dv = p1[at(i, j)] + p2[at(i, j)];
            if (i > 0) dv -= p1[at(i - 1, j)];
            if (j > 0) dv -= p2[at(i, j - 1)];
            out.values[at(i, j)] = b[at(i, j)] + lam * dv;
        }
    return out;
}

inline double tv_objective(const SignalField& u, const SignalField& b, double lam) {
    const long N = u.shape.side;
    double obj = 0.0;
    for (long i = 0; i < N * N; ++i) {
        const double d = u.values[i] - b.values[i];
        obj += 0.5 * d * d;
    }
    for (long i = 0; i < N; ++i)
        for (long j = 0; j < N; ++j) {
            const double g1 = (i + 1 < N) ? u.values[(i + 1) * N + j] - u.values[i * N + j] : 0.0;
            const double g2 = (j + 1 < N) ? u.values[i * N + j + 1] - u.values[i * N + j] : 0.0;
            obj += lam * std::sqrt(g1 * g1 + g2 * g2);
        }
    return obj;
}

// Applies the denoiser over every window of the field (edge fill
// included). onsager_sum is the sum of center-coordinate derivatives,
// reduced by a pairwise tree so the result is independent of chunking.
inline DenoiseResult apply_denoiser(const DenoiserSpec& spec, const SignalField& field,
                                    double tau, int threads = 1,
                                    std::uint64_t probe_seed = 0) {
    spec.validate(field.shape);
    if (!(tau > 0.0)) throw ValidationError("invalid noise level: tau must be > 0");
    DenoiseResult res;
    const long total = field.shape.size();

    if (spec.kind == DenoiserKind::total_variation) {
        const double lam = spec.tv_lambda * tau;
        res.estimate = tv_denoise(field, lam, spec.tv_iters);
        // randomized divergence probe for the Onsager derivative sum
        Rng rng = Rng::stream(probe_seed, "tv-probe");
        std::vector<double> zp(total);
        double rms = 0.0;
        for (long i = 0; i < total; ++i) {
            zp[i] = rng.normal();
            rms += field.values[i] * field.values[i];
        }
        rms = std::sqrt(rms / total);
        const double eps = 1e-3 * (rms > 0.0 ? rms : 1.0);
        SignalField pert(field.shape);
        for (long i = 0; i < total; ++i) pert.values[i] = field.values[i] + eps * zp[i];
        const SignalField est2 = tv_denoise(pert, lam, spec.tv_iters);
        std::vector<double> terms(total);
        for (long i = 0; i < total; ++i)
            terms[i] = zp[i] * (est2.values[i] - res.estimate.values[i]) / eps;
        res.onsager_sum = pairwise_sum(terms);
        return res;
    }

    const WindowPosterior wp = make_posterior(spec.prior, spec.window.mask);
    res.estimate = SignalField(field.shape);
    std::vector<double> deriv(total);
    const double inv_t2 = 1.0 / (tau * tau);
    parallel_for(static_cast<std::size_t>(total), threads, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            const WindowPatch patch = extract_window(field, static_cast<long>(i), spec.window);
            const double p = wp.posterior_p1(patch.data(), tau);
            res.estimate.values[i] = p;
            deriv[i] = p * (1.0 - p) * inv_t2;
        }
    });
    res.onsager_sum = pairwise_sum(deriv);
    if (!all_finite(res.estimate.values) || !std::isfinite(res.onsager_sum))
        throw Error("non-finite denoiser output");
    return res;
}

} // namespace swamp
