#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lattice.hpp"
#include "rng.hpp"
#include "util.hpp"

namespace swamp {

// The four-parameter stationary binary MRF used throughout: parameter
// validation, the 2x2 block joint (unilateral / Pickard construction),
// exact window marginals via the generic-measure product formula,
// raster-scan sampling, and Dobrushin coefficients.

struct MrfParams {
    double p = 0.4, q = 0.5, r = 0.01, s = 0.4;
    bool operator==(const MrfParams&) const = default;
    void validate() const {
        for (double v : {p, q, r, s})
            if (!(v > 0.0 && v < 1.0))
                throw ValidationError("MRF parameters must lie strictly in (0,1)");
    }
};

struct BlockJoint {
    // table[a][b][c][d] = P(x00=a, x01=b, x10=c, x11=d)
    double table[2][2][2][2];
    double singleton[2];
    double pair_h[2][2], pair_v[2][2];
    // corner conditional g[a][b][c] = P(x11=1 | x00=a, x01=b, x10=c), kept
    // for the raster sampler
    double g[2][2][2];
    double t1; // the free degree of freedom, pinned by maximum entropy
};

struct WindowDistribution {
    int dim = 2;
    int k = 1;
    long d = 9;                 // number of window cells
    std::vector<double> probs;  // length 2^d; bit u of the index = cell u (row-major)
    double raw_mass = 1.0;      // pre-normalization mass of the product formula
};

namespace detail {

// The block law factorizes as pi(a) T[a][b] T[a][c] * corner conditional.
// Stationarity plus the two given 2x2 conditionals (r, s) plus transpose
// symmetry pin all but one degree of freedom of the corner conditional;
// this evaluates the family at free parameter t1 = g(1|0,0,0).
struct BlockFamily {
    double pi[2], T[2][2], p, q, r, s;

    explicit BlockFamily(const MrfParams& mp) : p(mp.p), q(mp.q), r(mp.r), s(mp.s) {
        pi[0] = p / (p + q);
        pi[1] = q / (p + q);
        T[0][0] = 1 - q; T[0][1] = q;
        T[1][0] = p;     T[1][1] = 1 - p;
    }

    void eval(double t1, double g[2][2][2]) const {
        g[0][0][0] = t1;
        g[0][0][1] = 1.0 - r * (1 - q) * (1 - t1) / (q * (1 - r));
        g[0][1][0] = g[0][0][1];
        g[1][1][1] = 1.0 - s;
        g[0][1][1] = pi[1] * T[1][1] * T[1][1] * (1.0 - g[1][1][1]) / (pi[0] * T[0][1] * T[0][1]);
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
                if (b == 1 && c == 1) continue;
                g[1][b][c] =
                    1.0 - pi[0] * T[0][b] * T[0][c] * g[0][b][c] / (pi[1] * T[1][b] * T[1][c]);
            }
    }

    bool feasible(double t1) const {
        double g[2][2][2];
        eval(t1, g);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    if (!(g[a][b][c] >= -1e-15 && g[a][b][c] <= 1.0 + 1e-15)) return false;
        return true;
    }

    void joint(double t1, double J[16]) const {
        double g[2][2][2];
        eval(t1, g);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) {
                    const double base = pi[a] * T[a][b] * T[a][c];
                    J[a * 8 + b * 4 + c * 2 + 1] = base * g[a][b][c];
                    J[a * 8 + b * 4 + c * 2 + 0] = base * (1.0 - g[a][b][c]);
                }
    }
};

} // namespace detail

inline BlockJoint derive_block_joint(const MrfParams& params) {
    params.validate();
    detail::BlockFamily fam(params);

    // feasible interval for t1: scan then bisect the endpoints
    const int scan = 4096;
    double lo = -1.0, hi = -1.0;
    for (int i = 0; i <= scan; ++i) {
        const double t = static_cast<double>(i) / scan;
        if (fam.feasible(t)) {
            if (lo < 0) lo = t;
            hi = t;
        }
    }
    if (lo < 0) throw ValidationError("inconsistent MRF parameters: no valid block joint");
    const double step = 1.0 / scan;
    for (double a = lo - step, b = lo; ; lo = b) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        (fam.feasible(m) ? b : a) = m;
    }
    for (double a = hi, b = hi + step; ; hi = a) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        (fam.feasible(m) ? a : b) = m;
    }

    // J is affine in t1, so dH/dt1 = -sum b_i ln J_i with constant slopes
    // b_i; H is strictly concave, the root is unique. Bisection to machine
    // precision.
    double J0[16], J1[16], slope[16];
    fam.joint(lo + 0.25 * (hi - lo), J0);
    fam.joint(lo + 0.75 * (hi - lo), J1);
    for (int i = 0; i < 16; ++i) slope[i] = (J1[i] - J0[i]) / (0.5 * (hi - lo));
    auto dH = [&](double t) {
        double J[16];
        fam.joint(t, J);
        double v = 0.0;
        for (int i = 0; i < 16; ++i) v -= slope[i] * std::log(std::max(J[i], 1e-300));
        return v;
    };
    double a = lo + 1e-14, b = hi - 1e-14;
    if (!(dH(a) > 0.0 && dH(b) < 0.0))
        throw ValidationError("inconsistent MRF parameters: entropy pin has no interior optimum");
    for (int it = 0; it < 200 && b - a > 1e-17; ++it) {
        const double m = 0.5 * (a + b);
        (dH(m) > 0.0 ? a : b) = m;
    }
    const double t1 = 0.5 * (a + b);

    BlockJoint bj{};
    bj.t1 = t1;
    double J[16];
    fam.joint(t1, J);
    fam.eval(t1, bj.g);
    for (int i = 0; i < 16; ++i)
        bj.table[i >> 3 & 1][i >> 2 & 1][i >> 1 & 1][i & 1] = J[i];
    bj.singleton[0] = fam.pi[0];
    bj.singleton[1] = fam.pi[1];
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            bj.pair_h[x][y] = bj.pair_v[x][y] = fam.pi[x] * fam.T[x][y];

    // consistency identities
    double mass = 0.0;
    for (int i = 0; i < 16; ++i) {
        if (J[i] < -1e-14)
            throw ValidationError("inconsistent MRF parameters: negative block probability");
        mass += J[i];
    }
    auto check = [](double u, double v, const char* what) {
        if (std::fabs(u - v) > 1e-10)
            throw ValidationError(std::string("inconsistent MRF parameters: ") + what);
    };
    check(mass, 1.0, "block joint does not sum to 1");
    double ph[2][2] = {{0, 0}, {0, 0}}, pv[2][2] = {{0, 0}, {0, 0}}, pb[2][2] = {{0, 0}, {0, 0}};
    double sing_d[2] = {0, 0};
    for (int i = 0; i < 16; ++i) {
        const int aa = i >> 3 & 1, bb = i >> 2 & 1, cc = i >> 1 & 1, dd = i & 1;
        ph[aa][bb] += J[i];
        pv[aa][cc] += J[i];
        pb[cc][dd] += J[i]; // bottom-row pair, must match pair_h (stationarity)
        sing_d[dd] += J[i];
    }
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            check(ph[x][y], bj.pair_h[x][y], "horizontal pair marginal");
            check(pv[x][y], bj.pair_v[x][y], "vertical pair marginal");
            check(pb[x][y], bj.pair_h[x][y], "bottom-row pair not stationary");
            check(ph[x][y], pv[x][y], "pair_h != pair_v");
        }
    check(sing_d[1], bj.singleton[1], "corner singleton marginal");
    const double r_chk = bj.table[0][0][1][0] / (bj.table[0][0][0][0] + bj.table[0][0][1][0]);
    const double s_chk = bj.table[1][1][1][0] / (bj.table[1][1][1][0] + bj.table[1][1][1][1]);
    if (std::fabs(r_chk - params.r) > 1e-10 || std::fabs(s_chk - params.s) > 1e-10)
        throw ValidationError("inconsistent MRF parameters: r/s round-trip failed");
    return bj;
}

// Exact window marginal via the product/quotient of generic measures.
inline WindowDistribution window_marginal(const MrfParams& params, int dim, int k) {
    params.validate();
    if (k < 0) throw ValidationError("window half-width must be >= 0");
    const BlockJoint bj = derive_block_joint(params);
    WindowDistribution wd;
    wd.dim = dim;
    wd.k = k;

    if (k == 0) {
        wd.d = 1;
        wd.probs = {bj.singleton[0], bj.singleton[1]};
        wd.raw_mass = bj.singleton[0] + bj.singleton[1];
        return wd;
    }

    if (dim == 1) {
        const long d = 2L * k + 1;
        if (d > 25) throw ValidationError("1D window marginal too large (2k+1 > 25)");
        wd.d = d;
        const long n = 1L << d;
        wd.probs.assign(n, 0.0);
        double mass = 0.0;
        for (long code = 0; code < n; ++code) {
            double pr = bj.singleton[code & 1];
            for (long i = 0; i + 1 < d; ++i) {
                const int x = static_cast<int>(code >> i & 1), y = static_cast<int>(code >> (i + 1) & 1);
                pr *= bj.pair_h[x][y] / bj.singleton[x];
            }
            wd.probs[code] = pr;
            mass += pr;
        }
        wd.raw_mass = mass;
        if (std::fabs(mass - 1.0) > 1e-9)
            throw ValidationError("window marginal mass deviates from 1");
        for (auto& v : wd.probs) v /= mass;
        return wd;
    }

    if (dim != 2) throw ValidationError("window marginal supports dim in {1,2}");
    if (k > 1) throw ValidationError("2D window marginal too large for k >= 2 (2^((2k+1)^2) states)");

    const long w = 2L * k + 1; // 3
    wd.d = w * w;
    const long n = 1L << wd.d;
    wd.probs.assign(n, 0.0);
    double mass = 0.0;
    for (long code = 0; code < n; ++code) {
        auto X = [&](long m, long nn) { return static_cast<int>(code >> (m * w + nn) & 1); };
        double num = 1.0, den = 1.0;
        for (long m = 0; m + 1 < w; ++m)
            for (long nn = 0; nn + 1 < w; ++nn)
                num *= bj.table[X(m, nn)][X(m, nn + 1)][X(m + 1, nn)][X(m + 1, nn + 1)];
        for (long m = 1; m + 1 < w; ++m)
            for (long nn = 1; nn + 1 < w; ++nn)
                num *= bj.singleton[X(m, nn)];
        for (long m = 1; m + 1 < w; ++m)
            for (long nn = 0; nn + 1 < w; ++nn)
                den *= bj.pair_h[X(m, nn)][X(m, nn + 1)];
        for (long m = 0; m + 1 < w; ++m)
            for (long nn = 1; nn + 1 < w; ++nn)
                den *= bj.pair_v[X(m, nn)][X(m + 1, nn)];
        if (den <= 0.0) throw ValidationError("degenerate generic measure in denominator");
        const double pr = num / den;
        wd.probs[code] = pr;
        mass += pr;
    }
    wd.raw_mass = mass;
    if (std::fabs(mass - 1.0) > 1e-9)
        throw ValidationError("window marginal mass deviates from 1");
    for (auto& v : wd.probs) v /= mass;
    return wd;
}

// Exact stationary sample: chain for dim=1, unilateral raster scan for dim=2.
inline SignalField sample_field(const MrfParams& params, const LatticeShape& shape,
                                std::uint64_t seed) {
    params.validate();
    shape.validate();
    if (shape.dim == 3) throw ValidationError("sampling not supported for dim=3");
    const BlockJoint bj = derive_block_joint(params);
    const double T1[2] = {params.q, 1.0 - params.p}; // P(next=1 | prev)
    Rng rng = Rng::stream(seed, "mrf-sample");
    SignalField f(shape);
    const long N = shape.side;
    if (shape.dim == 1) {
        int prev = rng.bernoulli(bj.singleton[1]) ? 1 : 0;
        f.values[0] = prev;
        for (long i = 1; i < N; ++i) {
            prev = rng.bernoulli(T1[prev]) ? 1 : 0;
            f.values[i] = prev;
        }
        return f;
    }
    std::vector<int> x(N * N, 0);
    x[0] = rng.bernoulli(bj.singleton[1]) ? 1 : 0;
    for (long n = 1; n < N; ++n) x[n] = rng.bernoulli(T1[x[n - 1]]) ? 1 : 0;
    for (long m = 1; m < N; ++m) x[m * N] = rng.bernoulli(T1[x[(m - 1) * N]]) ? 1 : 0;
    for (long m = 1; m < N; ++m)
        for (long n = 1; n < N; ++n) {
            const int a = x[(m - 1) * N + n - 1], b = x[(m - 1) * N + n], c = x[m * N + n - 1];
            x[m * N + n] = rng.bernoulli(bj.g[a][b][c]) ? 1 : 0;
        }
    for (long i = 0; i < N * N; ++i) f.values[i] = x[i];
    return f;
}

// Dobrushin interdependence coefficients from the k=1 window marginal:
// for a bulk site, the full conditional given the 8 neighbors. C_{i,j}
// depends only on the offset j-i by stationarity; c is the row sum and
// c_star the column sum (the sum over reflected offsets).
inline void dobrushin_coefficients(const MrfParams& params, double& c, double& c_star,
                                   std::vector<double>* per_offset = nullptr) {
    const WindowDistribution wd = window_marginal(params, 2, 1);
    const int nbr[8] = {0, 1, 2, 3, 5, 6, 7, 8}; // window cells, center = bit 4
    double C[9] = {0};
    for (int j : nbr) {
        int others[7], no = 0;
        for (int b : nbr)
            if (b != j) others[no++] = b;
        double mx = 0.0;
        for (int oc = 0; oc < 128; ++oc) {
            long code = 0;
            for (int i = 0; i < 7; ++i) code |= static_cast<long>(oc >> i & 1) << others[i];
            auto pcond = [&](long cd) {
                const double p0 = wd.probs[cd], p1 = wd.probs[cd | 16];
                return p1 / (p0 + p1);
            };
            // binary single site: total-variation distance of the two
            // conditionals is |P(1|xi) - P(1|xi')|
            const double diff = std::fabs(pcond(code | (1L << j)) - pcond(code));
            mx = std::max(mx, diff);
        }
        C[j] = mx;
    }
    c = 0.0;
    c_star = 0.0;
    for (int j : nbr) c += C[j];
    for (int j : nbr) c_star += C[8 - j]; // reflected offsets
    if (per_offset) per_offset->assign(C, C + 9);
}

} // namespace swamp
