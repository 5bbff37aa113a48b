#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <bit>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace swamp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct DivergenceError : Error {
    int iteration = -1;
    DivergenceError(const std::string& msg, int it) : Error(msg), iteration(it) {}
};

// Deterministic pairwise tree sum: result is independent of how the terms
// were produced (threaded or not), only of their order in the buffer.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

// Runs fn(begin,end) over [0,total) split into contiguous chunks. Output
// must go to preallocated per-index storage; chunking never affects results.
inline void parallel_for(std::size_t total, int threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (threads <= 1 || total < 2) {
        fn(0, total);
        return;
    }
    const std::size_t nt = std::min<std::size_t>(threads, total);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const std::size_t chunk = (total + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(total, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, b, e);
    }
    for (auto& th : pool) th.join();
}

// exp over a float buffer, |x| clamped; accurate to ~3 ulp which is far
// below the Monte-Carlo noise of the callers. Branchless so the compiler
// can vectorize it.
inline void exp_f32(const float* x, float* out, std::size_t n) { // NOLINT
    constexpr float log2e = 1.44269504088896341f;
    constexpr float c0 = 0.693359375f;       // ln2 split (Cody-Waite)
    constexpr float c1 = -2.12194440e-4f;
    for (std::size_t i = 0; i < n; ++i) {
        float v = x[i];
        v = std::min(88.0f, std::max(-87.0f, v));
        // round-to-nearest via the float23 magic constant (|v*log2e| < 2^22)
        const float fk = (v * log2e + 12582912.0f) - 12582912.0f;
        const float r = (v - fk * c0) - fk * c1;
        // degree-6 minimax polynomial for e^r on [-ln2/2, ln2/2]
        float p = 1.9875691500e-4f;
        p = p * r + 1.3981999507e-3f;
        p = p * r + 8.3334519073e-3f;
        p = p * r + 4.1665795894e-2f;
        p = p * r + 1.6666665459e-1f;
        p = p * r + 5.0000001201e-1f;
        p = p * r * r + r + 1.0f;
        const std::int32_t e = (static_cast<std::int32_t>(fk) + 127) << 23;
        out[i] = p * std::bit_cast<float>(e);
    }
}

// exp(x[i] - shift) in place-capable form; same accuracy notes as exp_f32.
inline void exp_f32_sub(const float* x, float shift, float* out, std::size_t n) { // NOLINT
    constexpr float log2e = 1.44269504088896341f;
    constexpr float c0 = 0.693359375f;
    constexpr float c1 = -2.12194440e-4f;
    for (std::size_t i = 0; i < n; ++i) {
        float v = x[i] - shift;
        v = std::min(88.0f, std::max(-87.0f, v));
        const float fk = (v * log2e + 12582912.0f) - 12582912.0f;
        const float r = (v - fk * c0) - fk * c1;
        float p = 1.9875691500e-4f;
        p = p * r + 1.3981999507e-3f;
        p = p * r + 8.3334519073e-3f;
        p = p * r + 4.1665795894e-2f;
        p = p * r + 1.6666665459e-1f;
        p = p * r + 5.0000001201e-1f;
        p = p * r * r + r + 1.0f;
        const std::int32_t e = (static_cast<std::int32_t>(fk) + 127) << 23;
        out[i] = p * std::bit_cast<float>(e);
    }
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace swamp
