#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "util.hpp"

namespace swamp {

// Index sets Gamma = [N]^dim, sliding windows Lambda_i of half-width k,
// the mid/edge partition, and the mean edge-fill rule for cells of a
// window that fall outside the lattice.

struct LatticeShape {
    int dim = 1;   // 1, 2 or 3
    long side = 1; // N

    long size() const {
        long s = 1;
        for (int d = 0; d < dim; ++d) s *= side;
        return s;
    }
    void validate() const {
        if (dim < 1 || dim > 3) throw ValidationError("lattice dim must be 1, 2 or 3");
        if (side < 1) throw ValidationError("lattice side must be >= 1");
    }
};

struct WindowSpec {
    int half_width = 0;          // k
    std::vector<char> mask;      // empty = all cells processed; else length (2k+1)^dim

    long cells(int dim) const {
        long c = 1;
        for (int d = 0; d < dim; ++d) c *= 2L * half_width + 1;
        return c;
    }
    void validate(const LatticeShape& shape) const {
        if (half_width < 0) throw ValidationError("window half-width must be >= 0");
        if (2L * half_width + 1 > shape.side)
            throw ValidationError("window larger than lattice (2k+1 > N)");
        if (!mask.empty()) {
            const long d = cells(shape.dim);
            if (static_cast<long>(mask.size()) != d)
                throw ValidationError("mask length does not match window size");
            if (!mask[d / 2]) throw ValidationError("mask must include the center cell");
        }
    }
};

struct SignalField {
    LatticeShape shape;
    std::vector<double> values; // row-major

    SignalField() = default;
    SignalField(LatticeShape s, double fill = 0.0) : shape(s), values(s.size(), fill) {}
};

using WindowPatch = std::vector<double>;
using Coord = std::array<long, 3>;

inline Coord flat_to_coord(long idx, const LatticeShape& shape) {
    Coord c{0, 0, 0};
    for (int d = shape.dim - 1; d >= 0; --d) {
        c[d] = idx % shape.side;
        idx /= shape.side;
    }
    return c;
}

inline long coord_to_flat(const Coord& c, const LatticeShape& shape) {
    long idx = 0;
    for (int d = 0; d < shape.dim; ++d) idx = idx * shape.side + c[d];
    return idx;
}

// mid = indices whose whole window sits inside Gamma.
inline void partition_indices(const LatticeShape& shape, const WindowSpec& w,
                              std::vector<long>& mid, std::vector<long>& edge) {
    shape.validate();
    w.validate(shape);
    mid.clear();
    edge.clear();
    const long k = w.half_width;
    const long total = shape.size();
    for (long i = 0; i < total; ++i) {
        const Coord c = flat_to_coord(i, shape);
        bool inside = true;
        for (int d = 0; d < shape.dim; ++d)
            if (c[d] < k || c[d] >= shape.side - k) { inside = false; break; }
        (inside ? mid : edge).push_back(i);
    }
}

// Window of v centered at `center`; out-of-lattice cells get the mean of
// the in-lattice cells of this window (the operator T_i).
inline WindowPatch extract_window(const SignalField& v, long center, const WindowSpec& w) {
    const LatticeShape& shape = v.shape;
    const long k = w.half_width;
    const long d = w.cells(shape.dim);
    WindowPatch patch(d);
    std::vector<char> missing(d, 0);
    const Coord cc = flat_to_coord(center, shape);
    double sum = 0.0;
    long nin = 0;
    for (long u = 0; u < d; ++u) {
        long rem = u;
        Coord p = cc;
        bool inside = true;
        for (int dd = shape.dim - 1; dd >= 0; --dd) {
            const long off = rem % (2 * k + 1) - k;
            rem /= 2 * k + 1;
            p[dd] += off;
            if (p[dd] < 0 || p[dd] >= shape.side) inside = false;
        }
        if (inside) {
            patch[u] = v.values[coord_to_flat(p, shape)];
            sum += patch[u];
            ++nin;
        } else {
            missing[u] = 1;
        }
    }
    if (nin < d) {
        const double mean = sum / static_cast<double>(nin);
        for (long u = 0; u < d; ++u)
            if (missing[u]) patch[u] = mean;
    }
    return patch;
}

// Re-center a fully defined patch at c+l; cells sliding off Lambda are
// filled with the mean of the surviving cells. Linear in the patch.
inline WindowPatch shift_window_fill(const WindowPatch& patch, const std::array<long, 3>& l,
                                     int dim, int k) {
    for (int d = 0; d < dim; ++d)
        if (l[d] < -k || l[d] > k) throw ValidationError("shift offset exceeds half-width");
    const long w = 2L * k + 1;
    long d_total = 1;
    for (int d = 0; d < dim; ++d) d_total *= w;
    if (static_cast<long>(patch.size()) != d_total)
        throw ValidationError("patch length does not match window size");
    WindowPatch out(d_total);
    std::vector<char> missing(d_total, 0);
    double sum = 0.0;
    long nin = 0;
    for (long u = 0; u < d_total; ++u) {
        long rem = u, src = 0, stride = 1;
        bool inside = true;
        // decode coords of u, add l, re-encode
        std::array<long, 3> cu{0, 0, 0};
        for (int dd = dim - 1; dd >= 0; --dd) {
            cu[dd] = rem % w;
            rem /= w;
        }
        for (int dd = 0; dd < dim; ++dd) {
            const long s = cu[dd] + l[dd];
            if (s < 0 || s >= w) { inside = false; break; }
            src = src * w + s;
        }
        (void)stride;
        if (inside) {
            out[u] = patch[src];
            sum += out[u];
            ++nin;
        } else {
            missing[u] = 1;
        }
    }
    if (nin < d_total) {
        const double mean = sum / static_cast<double>(nin);
        for (long u = 0; u < d_total; ++u)
            if (missing[u]) out[u] = mean;
    }
    return out;
}

inline std::vector<double> vectorize(const SignalField& v) { return v.values; }

inline SignalField devectorize(const std::vector<double>& x, const LatticeShape& shape) {
    if (static_cast<long>(x.size()) != shape.size())
        throw ValidationError("devectorize: length does not match shape");
    SignalField f(shape);
    f.values = x;
    return f;
}

} // namespace swamp
