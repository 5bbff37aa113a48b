#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "denoisers.hpp"
#include "lattice.hpp"
#include "mrf.hpp"
#include "rng.hpp"
#include "util.hpp"

namespace swamp {

// Deterministic state evolution (tau_t^2, sigma_t^2): the |Gamma| window
// terms are grouped into shift families (bulk + edge offsets), each
// evaluated by exact enumeration over the 2^d binary window configurations
// and Monte Carlo over the Gaussian patch.

struct SeTrajectory {
    std::vector<double> sigma2; // sigma_0^2 .. sigma_T^2
    std::vector<double> tau2;   // tau_t^2 = noise_sigma2 + sigma_t^2
    int mc_samples = 0;
    std::uint64_t seed = 0;
    int converged_at = -1;      // first t with |sigma_t^2 - sigma_{t-1}^2| < 1e-8
    bool low_sample = false;    // mc < 100
};

inline double se_init(const WindowDistribution& prior, double delta) {
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    const int center = static_cast<int>(prior.d / 2);
    double sb2 = 0.0;
    for (long x = 0; x < static_cast<long>(prior.probs.size()); ++x)
        if (x >> center & 1) sb2 += prior.probs[x]; // x_c^2 = x_c for binary
    if (sb2 <= 0.0) throw ValidationError("degenerate prior: zero second moment");
    return sb2 / delta;
}

struct SeFamily {
    std::array<long, 3> offset{0, 0, 0};
    double weight = 0.0; // number of lattice sites with this window offset
};

// Offsets l in [-k,k]^dim; a site contributes offset component l_j = 0 in
// the (N-2k) interior positions of dimension j and l_j != 0 at the edges,
// so the family weight is the product of (N-2k) over zero components.
inline std::vector<SeFamily> se_families(const LatticeShape& shape, const WindowSpec& w) {
    shape.validate();
    w.validate(shape);
    const long k = w.half_width;
    const long N = shape.side;
    std::vector<SeFamily> fams;
    std::array<long, 3> l{0, 0, 0};
    const long span = 2 * k + 1;
    long count = 1;
    for (int d = 0; d < shape.dim; ++d) count *= span;
    for (long code = 0; code < count; ++code) {
        long rem = code;
        double weight = 1.0;
        for (int d = shape.dim - 1; d >= 0; --d) {
            l[d] = rem % span - k;
            rem /= span;
            if (l[d] == 0) weight *= static_cast<double>(N - 2 * k);
        }
        fams.push_back({l, weight});
    }
    return fams;
}

// E[(eta(shift_fill(beta + tau Z)) - beta_{c+l})^2]: exact over the binary
// window configurations, Monte Carlo over Z. When joint_fill is set
// (default) the fill acts on the noisy field beta + tau Z jointly;
// by linearity of the fill this is shift_fill(beta) + tau shift_fill(Z).
// The alternative draws fresh noise in the filled cells.
inline double se_family_expectation(const WindowDistribution& prior, const WindowSpec& w,
                                    int dim, const std::array<long, 3>& offset, double tau,
                                    long mc, std::uint64_t seed, std::uint64_t family_tag,
                                    int threads = 1, bool joint_fill = true) {
    const int k = w.half_width;
    const int d = static_cast<int>(prior.d);
    const long nconf = 1L << d;
    const WindowPosterior wp = make_posterior(prior, w.mask);
    const double inv_t2 = 1.0 / (tau * tau);
    const long w1 = 2L * k + 1;

    // flat index of c+l inside the original patch
    long target_idx = 0;
    for (int dd = 0; dd < dim; ++dd) target_idx = target_idx * w1 + (k + offset[dd]);

    // shifted signal patch per configuration, and the score table
    // A[b][j] = score of config x_j given noiseless observation S(beta_b),
    // with columns permuted so center-bit-1 configs come first.
    std::vector<long> xnat(nconf);
    {
        long pos = 0;
        const long cbit = 1L << wp.center;
        for (long x = 0; x < nconf; ++x)
            if (x & cbit) xnat[pos++] = x;
        for (long x = 0; x < nconf; ++x)
            if (!(x & cbit)) xnat[pos++] = x;
    }
    std::vector<float> Ap(static_cast<std::size_t>(nconf) * nconf);
    std::vector<float> target(nconf);
    std::vector<double> dot(nconf);
    for (long b = 0; b < nconf; ++b) {
        WindowPatch beta(d);
        for (int i = 0; i < d; ++i) beta[i] = (b >> i & 1);
        const WindowPatch sb = shift_window_fill(beta, offset, dim, k);
        target[b] = static_cast<float>(beta[target_idx]);
        dot[0] = 0.0;
        for (long x = 1; x < nconf; ++x) {
            const int bit = std::countr_zero(static_cast<unsigned long>(x));
            dot[x] = dot[x & (x - 1)] + (wp.mask[bit] ? sb[bit] : 0.0);
        }
        float* row = &Ap[static_cast<std::size_t>(b) * nconf];
        for (long j = 0; j < nconf; ++j) {
            const long x = xnat[j];
            row[j] = static_cast<float>((dot[x] - wp.half_wsum[x]) * inv_t2 + wp.logmu[x]);
        }
    }

    // fixed chunking so thread count never changes the result
    const long chunk = 256;
    const long nchunks = (mc + chunk - 1) / chunk;
    std::vector<double> acc(static_cast<std::size_t>(nchunks) * nconf, 0.0);
    const long half = nconf / 2;

    parallel_for(static_cast<std::size_t>(nchunks), threads, [&](std::size_t c0, std::size_t c1) {
        std::vector<float> tmp(nconf), up(nconf);
        std::vector<double> z(d), u(nconf);
        WindowPatch zp(d);
        for (std::size_t ch = c0; ch < c1; ++ch) {
            Rng rng = Rng::stream(seed, "se-z", family_tag, ch);
            double* a = &acc[ch * nconf];
            const long lo = static_cast<long>(ch) * chunk;
            const long hi = std::min(mc, lo + chunk);
            for (long it = lo; it < hi; ++it) {
                for (int i = 0; i < d; ++i) zp[i] = rng.normal();
                WindowPatch sz = joint_fill ? shift_window_fill(zp, offset, dim, k) : zp;
                u[0] = 0.0;
                for (long x = 1; x < nconf; ++x) {
                    const int bit = std::countr_zero(static_cast<unsigned long>(x));
                    u[x] = u[x & (x - 1)] + (wp.mask[bit] ? sz[bit] / tau : 0.0);
                }
                for (long j = 0; j < nconf; ++j) up[j] = static_cast<float>(u[xnat[j]]);
                const float* __restrict upp = up.data();
                float* __restrict tp = tmp.data();
                for (long b = 0; b < nconf; ++b) {
                    const float* __restrict row = &Ap[static_cast<std::size_t>(b) * nconf];
                    float mx = -3e38f;
                    float s1 = 0.0f, s2 = 0.0f;
                    if (nconf >= 64) {
                        // 32 independent lanes so the reductions are not
                        // latency-bound
                        float m32[32];
                        for (int i = 0; i < 32; ++i) {
                            const float v = row[i] + upp[i];
                            tp[i] = v;
                            m32[i] = v;
                        }
                        for (long j = 32; j < nconf; j += 32)
                            for (int i = 0; i < 32; ++i) {
                                const float v = row[j + i] + upp[j + i];
                                tp[j + i] = v;
                                m32[i] = v > m32[i] ? v : m32[i];
                            }
                        for (int i = 0; i < 32; ++i) mx = m32[i] > mx ? m32[i] : mx;
                        exp_f32_sub(tp, mx, tp, nconf);
                        float a32[32], b32[32];
                        for (int i = 0; i < 32; ++i) {
                            a32[i] = 0.0f;
                            b32[i] = 0.0f;
                        }
                        for (long j = 0; j < half; j += 32)
                            for (int i = 0; i < 32; ++i) a32[i] += tp[j + i];
                        for (long j = half; j < nconf; j += 32)
                            for (int i = 0; i < 32; ++i) b32[i] += tp[j + i];
                        for (int i = 0; i < 32; ++i) {
                            s1 += a32[i];
                            s2 += b32[i];
                        }
                    } else {
                        for (long j = 0; j < nconf; ++j) {
                            tp[j] = row[j] + upp[j];
                            mx = tp[j] > mx ? tp[j] : mx;
                        }
                        exp_f32_sub(tp, mx, tp, nconf);
                        for (long j = 0; j < half; ++j) s1 += tp[j];
                        for (long j = half; j < nconf; ++j) s2 += tp[j];
                    }
                    const float p = s1 / (s1 + s2);
                    const float e = p - target[b];
                    a[b] += static_cast<double>(e) * e;
                }
            }
        }
    });

    // combine chunks in fixed order, then weight by the prior
    std::vector<double> per_conf(nconf, 0.0);
    for (long ch = 0; ch < nchunks; ++ch)
        for (long b = 0; b < nconf; ++b) per_conf[b] += acc[static_cast<std::size_t>(ch) * nconf + b];
    double total = 0.0;
    for (long b = 0; b < nconf; ++b) total += prior.probs[b] * per_conf[b] / static_cast<double>(mc);
    return total;
}

inline std::pair<double, double> se_step(double tau_prev2, const DenoiserSpec& denoiser,
                                         const WindowDistribution& prior,
                                         const LatticeShape& shape, const WindowSpec& w,
                                         double delta, double noise_sigma2, long mc,
                                         std::uint64_t seed, int step_index = 0,
                                         int threads = 1, bool joint_fill = true) {
    if (!(tau_prev2 > 0.0)) throw ValidationError("se_step: tau_prev2 must be positive");
    if (denoiser.kind == DenoiserKind::total_variation)
        throw ValidationError("state evolution supports Bayesian denoisers only");
    const double tau = std::sqrt(tau_prev2);
    const std::vector<SeFamily> fams = se_families(shape, w);
    double sum = 0.0;
    for (std::size_t f = 0; f < fams.size(); ++f) {
        const std::uint64_t tag = static_cast<std::uint64_t>(step_index) * 1024 + f;
        sum += fams[f].weight *
               se_family_expectation(prior, w, shape.dim, fams[f].offset, tau, mc, seed, tag,
                                     threads, joint_fill);
    }
    const double sigma_t2 = sum / (delta * static_cast<double>(shape.size()));
    return {sigma_t2, noise_sigma2 + sigma_t2};
}

inline SeTrajectory run_se(const WindowDistribution& prior, const DenoiserSpec& denoiser,
                           const LatticeShape& shape, const WindowSpec& w, double delta,
                           double noise_sigma2, int T, long mc, std::uint64_t seed,
                           int threads = 1, bool joint_fill = true) {
    if (T < 1) throw ValidationError("run_se: T must be >= 1");
    SeTrajectory tr;
    tr.mc_samples = static_cast<int>(mc);
    tr.seed = seed;
    tr.low_sample = mc < 100;
    tr.sigma2.push_back(se_init(prior, delta));
    tr.tau2.push_back(noise_sigma2 + tr.sigma2[0]);
    for (int t = 1; t <= T; ++t) {
        if (tr.converged_at >= 0) {
            // fixed point reached: extend with the converged value
            tr.sigma2.push_back(tr.sigma2.back());
            tr.tau2.push_back(tr.tau2.back());
            continue;
        }
        auto [s2, t2] = se_step(tr.tau2.back(), denoiser, prior, shape, w, delta, noise_sigma2,
                                mc, seed, t, threads, joint_fill);
        if (std::fabs(s2 - tr.sigma2.back()) < 1e-8) tr.converged_at = t;
        tr.sigma2.push_back(s2);
        tr.tau2.push_back(t2);
    }
    return tr;
}

} // namespace swamp
