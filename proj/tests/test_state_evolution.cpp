#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "swamp/mrf.hpp"
#include "swamp/state_evolution.hpp"

using namespace swamp;

namespace {

const MrfParams kStd{0.4, 0.5, 0.01, 0.4};

WindowDistribution point_mass_prior(int d, long conf) {
    WindowDistribution wd;
    wd.dim = 1;
    wd.k = 0;
    wd.d = d;
    wd.probs.assign(1L << d, 0.0);
    wd.probs[conf] = 1.0;
    return wd;
}

DenoiserSpec bayes_spec(const WindowDistribution& prior, int k) {
    DenoiserSpec spec;
    spec.kind = k == 0 ? DenoiserKind::bayes_separable : DenoiserKind::bayes_window;
    spec.window = WindowSpec{k, {}};
    spec.prior = prior;
    return spec;
}

} // namespace

TEST_CASE("se_init values") {
    const WindowDistribution prior = window_marginal(kStd, 2, 0);
    CHECK(se_init(prior, 0.5) == doctest::Approx(10.0 / 9.0).epsilon(1e-13));
    CHECK(se_init(prior, 1.0) == doctest::Approx(5.0 / 9.0).epsilon(1e-13));
    const WindowDistribution p9 = window_marginal(kStd, 2, 1);
    CHECK(se_init(p9, 0.5) == doctest::Approx(10.0 / 9.0).epsilon(1e-12));
    CHECK_THROWS_AS(se_init(point_mass_prior(1, 0), 0.5), ValidationError);
    CHECK_THROWS_AS(se_init(prior, 0.0), ValidationError);
}

TEST_CASE("family weights sum to the lattice size") {
    for (auto [N, k] : std::vector<std::pair<long, int>>{{8, 1}, {64, 1}, {128, 2}}) {
        const LatticeShape shape{2, N};
        const std::vector<SeFamily> fams = se_families(shape, {k, {}});
        CHECK(fams.size() == static_cast<std::size_t>((2 * k + 1) * (2 * k + 1)));
        double total = 0.0;
        for (const auto& f : fams) total += f.weight;
        CHECK(total == static_cast<double>(N) * N); // exact in doubles
        // bulk family weight is (N-2k)^2
        for (const auto& f : fams)
            if (f.offset[0] == 0 && f.offset[1] == 0)
                CHECK(f.weight == static_cast<double>((N - 2 * k) * (N - 2 * k)));
    }
    // dim = 1
    const std::vector<SeFamily> f1 = se_families({1, 21}, {2, {}});
    double total = 0.0;
    for (const auto& f : f1) total += f.weight;
    CHECK(total == 21.0);
}

TEST_CASE("point-mass prior gives a perfect denoiser: sigma = 0") {
    const WindowDistribution prior = point_mass_prior(1, 1);
    const DenoiserSpec spec = bayes_spec(prior, 0);
    auto [s2, t2] = se_step(1.0, spec, prior, {2, 16}, {0, {}}, 0.5, 0.03, 500, 1);
    CHECK(s2 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t2 == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("tau2 = noise + sigma2 along the trajectory") {
    const WindowDistribution prior = window_marginal(kStd, 2, 0);
    const DenoiserSpec spec = bayes_spec(prior, 0);
    const SeTrajectory tr = run_se(prior, spec, {2, 32}, {0, {}}, 0.5, 0.022, 6, 20000, 7);
    REQUIRE(tr.sigma2.size() == 7);
    REQUIRE(tr.tau2.size() == 7);
    for (std::size_t t = 0; t < tr.sigma2.size(); ++t)
        CHECK(tr.tau2[t] == doctest::Approx(0.022 + tr.sigma2[t]).epsilon(1e-13));
    CHECK(tr.sigma2[0] == doctest::Approx(10.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("huge noise flattens the recursion at the prior variance") {
    const WindowDistribution prior = window_marginal(kStd, 2, 0);
    const DenoiserSpec spec = bayes_spec(prior, 0);
    const double noise = 1e4; // SNR around -40 dB
    const SeTrajectory tr = run_se(prior, spec, {2, 32}, {0, {}}, 0.5, noise, 4, 200000, 3);
    // denoiser output collapses to the prior mean pi(1)
    const double pi1 = 5.0 / 9.0;
    const double expect = pi1 * (1.0 - pi1) / 0.5; // Var(beta)/delta
    for (std::size_t t = 1; t < tr.sigma2.size(); ++t)
        CHECK(tr.sigma2[t] == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("first k=1 step against the frozen reference") {
    const WindowDistribution prior = window_marginal(kStd, 2, 1);
    const DenoiserSpec spec = bayes_spec(prior, 1);
    const double noise = (5.0 / 9.0) / (0.5 * std::pow(10.0, 1.7));
    auto [s2, t2] = se_step(10.0 / 9.0 + noise, spec, prior, {2, 64}, {1, {}}, 0.5, noise, 4000,
                            101, 1, 1);
    CHECK(s2 == doctest::Approx(0.3798).epsilon(0.03));
    CHECK(t2 == doctest::Approx(noise + s2).epsilon(1e-13));
}

TEST_CASE("monte-carlo self-consistency when doubling mc") {
    const WindowDistribution prior = window_marginal(kStd, 2, 0);
    const DenoiserSpec spec = bayes_spec(prior, 0);
    const double noise = 0.0221695812774320;
    const long mc = 50000;
    auto [a, ta] = se_step(10.0 / 9.0 + noise, spec, prior, {2, 64}, {0, {}}, 0.5, noise, mc, 5);
    auto [b, tb] = se_step(10.0 / 9.0 + noise, spec, prior, {2, 64}, {0, {}}, 0.5, noise, 2 * mc, 5);
    CHECK(std::fabs(a - b) / b < 2.0 / std::sqrt(static_cast<double>(mc)));
}

TEST_CASE("edge families barely shift sigma2 at N=128") {
    const WindowDistribution prior = window_marginal(kStd, 2, 1);
    const DenoiserSpec spec = bayes_spec(prior, 1);
    const double tau2 = 0.5;
    const double noise = 0.02;
    auto [s128, t128] =
        se_step(tau2, spec, prior, {2, 128}, {1, {}}, 0.5, noise, 1000, 77, 9, 1);
    auto [s512, t512] =
        se_step(tau2, spec, prior, {2, 512}, {1, {}}, 0.5, noise, 1000, 77, 9, 1);
    CHECK(std::fabs(s128 - s512) / s512 < 0.05);
}

TEST_CASE("exchanging enumeration and monte-carlo roles agrees") {
    // reference: exact enumeration over beta, MC over Z
    const WindowDistribution prior = window_marginal(kStd, 2, 1);
    const WindowSpec w{1, {}};
    const double tau = 0.35;
    const long mc = 20000;
    const double ref =
        se_family_expectation(prior, w, 2, {0, 0, 0}, tau, mc, 42, 1, 1);

    // alternative: sample beta ~ mu, draw Z fresh, average directly
    const WindowPosterior wp = make_posterior(prior);
    std::vector<double> cdf(prior.probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < prior.probs.size(); ++i) {
        acc += prior.probs[i];
        cdf[i] = acc;
    }
    Rng rng(4242);
    double sum = 0.0, sum2 = 0.0;
    const long m = 20000;
    for (long it = 0; it < m; ++it) {
        const double u = rng.uniform();
        long x = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
        WindowPatch v(9);
        for (int b = 0; b < 9; ++b) v[b] = (x >> b & 1) + tau * rng.normal();
        const double e = wp.posterior_p1(v.data(), tau) - static_cast<double>(x >> 4 & 1);
        sum += e * e;
        sum2 += e * e * e * e;
    }
    const double alt = sum / m;
    const double var = sum2 / m - alt * alt;
    const double stderr3 = 3.0 * std::sqrt(var / m) + 3.0 * ref / std::sqrt(static_cast<double>(mc));
    CHECK(std::fabs(alt - ref) < stderr3 + 1e-4);
}

TEST_CASE("se_step input validation") {
    const WindowDistribution prior = window_marginal(kStd, 2, 0);
    DenoiserSpec tv;
    tv.kind = DenoiserKind::total_variation;
    CHECK_THROWS_AS(se_step(1.0, tv, prior, {2, 16}, {0, {}}, 0.5, 0.02, 100, 1),
                    ValidationError);
    const DenoiserSpec spec = bayes_spec(prior, 0);
    CHECK_THROWS_AS(se_step(0.0, spec, prior, {2, 16}, {0, {}}, 0.5, 0.02, 100, 1),
                    ValidationError);
    CHECK_THROWS_AS(run_se(prior, spec, {2, 16}, {0, {}}, 0.5, 0.02, 0, 100, 1),
                    ValidationError);
}

TEST_CASE("run_se marks convergence and extends with the fixed point") {
    const WindowDistribution prior = window_marginal(kStd, 2, 0);
    const DenoiserSpec spec = bayes_spec(prior, 0);
    // enormous noise: the recursion hits its fixed point after one step
    const SeTrajectory tr = run_se(prior, spec, {2, 16}, {0, {}}, 0.5, 1e8, 6, 150000, 9);
    CHECK(tr.converged_at >= 1);
    for (std::size_t t = tr.converged_at + 1; t < tr.sigma2.size(); ++t)
        CHECK(tr.sigma2[t] == tr.sigma2[tr.converged_at]);
    CHECK(!tr.low_sample);
    const SeTrajectory low = run_se(prior, spec, {2, 16}, {0, {}}, 0.5, 0.02, 1, 50, 9);
    CHECK(low.low_sample);
}

TEST_CASE("joint fill versus independent fill differ only off-center") {
    const WindowDistribution prior = window_marginal(kStd, 2, 1);
    const WindowSpec w{1, {}};
    const double tau = 0.4;
    const double a = se_family_expectation(prior, w, 2, {0, 0, 0}, tau, 2000, 11, 0, 1, true);
    const double b = se_family_expectation(prior, w, 2, {0, 0, 0}, tau, 2000, 11, 0, 1, false);
    CHECK(a == b); // offset zero: the fill is the identity
    const double c = se_family_expectation(prior, w, 2, {1, 1, 0}, tau, 2000, 11, 0, 1, true);
    const double d = se_family_expectation(prior, w, 2, {1, 1, 0}, tau, 2000, 11, 0, 1, false);
    CHECK(std::isfinite(c));
    CHECK(std::isfinite(d));
    CHECK(c != d);
}

TEST_CASE("se results are thread-count independent") {
    const WindowDistribution prior = window_marginal(kStd, 2, 1);
    const WindowSpec w{1, {}};
    const double a = se_family_expectation(prior, w, 2, {1, 0, 0}, 0.4, 3000, 21, 7, 1);
    const double b = se_family_expectation(prior, w, 2, {1, 0, 0}, 0.4, 3000, 21, 7, 8);
    CHECK(a == b);
}
