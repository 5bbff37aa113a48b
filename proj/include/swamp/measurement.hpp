#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lattice.hpp"
#include "rng.hpp"
#include "util.hpp"

namespace swamp {

// Linear observation model y = A vec(beta) + w with A i.i.d. N(0,1/n).

struct MeasurementModel {
    long n = 0;
    long signal_len = 0;
    double delta = 0.0;  // n / |Gamma|, recomputed after rounding
    double sigma2 = 0.0; // noise variance
    std::vector<double> A; // row-major n x signal_len
};

// Rows get independent counter-derived streams so generation can be
// chunked arbitrarily without changing the output.
inline std::vector<double> sample_matrix(long n, long cols, std::uint64_t seed, int threads = 1) {
    if (n < 1 || cols < 1) throw ValidationError("matrix dimensions must be positive");
    std::vector<double> A(static_cast<std::size_t>(n) * cols);
    const double sd = 1.0 / std::sqrt(static_cast<double>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            Rng rng = Rng::stream(seed, "matrix-row", 0, r);
            double* row = &A[r * cols];
            for (long c = 0; c < cols; ++c) row[c] = sd * rng.normal();
        }
    });
    return A;
}

inline std::vector<double> matvec(const std::vector<double>& A, long n, long cols,
                                  const std::vector<double>& x, int threads = 1) {
    if (static_cast<long>(x.size()) != cols) throw ValidationError("matvec: shape mismatch");
    std::vector<double> y(n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const double* row = &A[r * cols];
            double s = 0.0;
            for (long c = 0; c < cols; ++c) s += row[c] * x[c];
            y[r] = s;
        }
    });
    return y;
}

// A^T z; each output entry accumulates in fixed row order, so chunking
// over columns never changes the result.
inline std::vector<double> mat_t_vec(const std::vector<double>& A, long n, long cols,
                                     const std::vector<double>& z, int threads = 1) {
    if (static_cast<long>(z.size()) != n) throw ValidationError("mat_t_vec: shape mismatch");
    std::vector<double> out(cols, 0.0);
    parallel_for(static_cast<std::size_t>(cols), threads, [&](std::size_t c0, std::size_t c1) {
        for (long r = 0; r < n; ++r) {
            const double zr = z[r];
            const double* row = &A[static_cast<std::size_t>(r) * cols];
            for (std::size_t c = c0; c < c1; ++c) out[c] += zr * row[c];
        }
    });
    return out;
}

// SNR (dB) = 10 log10( ||A beta||^2 / (n sigma2) )
inline double calibrate_noise(const std::vector<double>& A, long n, long cols,
                              const SignalField& beta, double snr_db) {
    if (!std::isfinite(snr_db)) throw ValidationError("snr_db must be finite");
    const std::vector<double> Ab = matvec(A, n, cols, beta.values);
    double e = 0.0;
    for (double v : Ab) e += v * v;
    if (e == 0.0) throw ValidationError("calibrate_noise: zero signal");
    return e / (n * std::pow(10.0, snr_db / 10.0));
}

inline std::vector<double> measure(const std::vector<double>& A, long n, long cols,
                                   const SignalField& beta, double sigma2, std::uint64_t seed,
                                   int threads = 1) {
    std::vector<double> y = matvec(A, n, cols, beta.values, threads);
    if (sigma2 > 0.0) {
        Rng rng = Rng::stream(seed, "measure-noise");
        const double sd = std::sqrt(sigma2);
        for (long i = 0; i < n; ++i) y[i] += sd * rng.normal();
    }
    return y;
}

inline MeasurementModel make_model(const LatticeShape& shape, double delta, std::uint64_t seed,
                                   int threads = 1) {
    shape.validate();
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    MeasurementModel m;
    m.signal_len = shape.size();
    m.n = static_cast<long>(delta * m.signal_len); // round down
    if (m.n < 1) throw ValidationError("delta too small: n < 1");
    m.delta = static_cast<double>(m.n) / static_cast<double>(m.signal_len);
    m.A = sample_matrix(m.n, m.signal_len, seed, threads);
    return m;
}

} // namespace swamp
