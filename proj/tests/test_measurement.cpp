#include <doctest.h>

#include <cmath>
#include <vector>

#include "swamp/measurement.hpp"

using namespace swamp;

TEST_CASE("matrix entries have the right variance and column norms") {
    const long n = 500, cols = 2000;
    const std::vector<double> A = sample_matrix(n, cols, 5);
    double s = 0.0, s2 = 0.0;
    for (double v : A) {
        s += v;
        s2 += v * v;
    }
    const double mean = s / (n * cols);
    const double var = s2 / (n * cols) - mean * mean;
    CHECK(std::fabs(var - 1.0 / n) < 0.05 / n);
    double colsum = 0.0;
    for (long j = 0; j < cols; ++j) {
        double cn = 0.0;
        for (long i = 0; i < n; ++i) cn += A[i * cols + j] * A[i * cols + j];
        colsum += cn;
    }
    CHECK(std::fabs(colsum / cols - 1.0) < 0.05);
}

TEST_CASE("matrix generation: deterministic and thread-independent") {
    const std::vector<double> a = sample_matrix(64, 100, 9, 1);
    const std::vector<double> b = sample_matrix(64, 100, 9, 8);
    CHECK(a == b);
    CHECK(a != sample_matrix(64, 100, 10, 1));
    CHECK_THROWS_AS(sample_matrix(0, 10, 1), ValidationError);
}

TEST_CASE("matvec and mat_t_vec are exact and thread-independent") {
    const long n = 37, cols = 53;
    const std::vector<double> A = sample_matrix(n, cols, 3);
    Rng rng(8);
    std::vector<double> x(cols), z(n);
    for (auto& v : x) v = rng.normal();
    for (auto& v : z) v = rng.normal();
    const std::vector<double> y1 = matvec(A, n, cols, x, 1);
    const std::vector<double> y8 = matvec(A, n, cols, x, 8);
    CHECK(y1 == y8);
    for (long i = 0; i < n; ++i) {
        double s = 0.0;
        for (long j = 0; j < cols; ++j) s += A[i * cols + j] * x[j];
        CHECK(y1[i] == doctest::Approx(s).epsilon(1e-14));
    }
    const std::vector<double> c1 = mat_t_vec(A, n, cols, z, 1);
    const std::vector<double> c8 = mat_t_vec(A, n, cols, z, 8);
    CHECK(c1 == c8);
    for (long j = 0; j < cols; ++j) {
        double s = 0.0;
        for (long i = 0; i < n; ++i) s += A[i * cols + j] * z[i];
        CHECK(c1[j] == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("noise calibration follows the SNR definition") {
    const long n = 64;
    const LatticeShape shape{1, 128};
    const std::vector<double> A = sample_matrix(n, shape.size(), 2);
    SignalField beta(shape);
    Rng rng(6);
    for (auto& v : beta.values) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const std::vector<double> Ab = matvec(A, n, shape.size(), beta.values);
    double e = 0.0;
    for (double v : Ab) e += v * v;

    CHECK(calibrate_noise(A, n, shape.size(), beta, 0.0) == doctest::Approx(e / n).epsilon(1e-13));
    CHECK(calibrate_noise(A, n, shape.size(), beta, 10.0) ==
          doctest::Approx(e / (10.0 * n)).epsilon(1e-13));
    CHECK(calibrate_noise(A, n, shape.size(), beta, 300.0) < 1e-25);

    // doubling the signal energy doubles sigma2
    SignalField scaled = beta;
    for (auto& v : scaled.values) v *= std::sqrt(2.0);
    CHECK(calibrate_noise(A, n, shape.size(), scaled, 7.0) ==
          doctest::Approx(2.0 * calibrate_noise(A, n, shape.size(), beta, 7.0)).epsilon(1e-12));

    SignalField zero(shape);
    CHECK_THROWS_AS(calibrate_noise(A, n, shape.size(), zero, 17.0), ValidationError);
}

TEST_CASE("measure: exactness, determinism, residual variance") {
    const long n = 8192;
    const LatticeShape shape{1, 16};
    const std::vector<double> A = sample_matrix(n, shape.size(), 4);
    SignalField beta(shape);
    for (long i = 0; i < shape.size(); ++i) beta.values[i] = (i % 3 == 0) ? 1.0 : 0.0;

    const std::vector<double> clean = measure(A, n, shape.size(), beta, 0.0, 11);
    const std::vector<double> Ab = matvec(A, n, shape.size(), beta.values);
    CHECK(clean == Ab);

    const double sigma2 = 0.37;
    const std::vector<double> y = measure(A, n, shape.size(), beta, sigma2, 11);
    CHECK(y == measure(A, n, shape.size(), beta, sigma2, 11));
    double resid = 0.0;
    for (long i = 0; i < n; ++i) resid += (y[i] - Ab[i]) * (y[i] - Ab[i]);
    CHECK(std::fabs(resid / n - sigma2) < 0.1 * sigma2);
}

TEST_CASE("measure is affine in beta at zero noise") {
    const long n = 32;
    const LatticeShape shape{1, 40};
    const std::vector<double> A = sample_matrix(n, shape.size(), 8);
    Rng rng(1);
    SignalField b1(shape), b2(shape), sum(shape);
    for (long i = 0; i < shape.size(); ++i) {
        b1.values[i] = rng.normal();
        b2.values[i] = rng.normal();
        sum.values[i] = b1.values[i] + b2.values[i];
    }
    const std::vector<double> y1 = measure(A, n, shape.size(), b1, 0.0, 0);
    const std::vector<double> y2 = measure(A, n, shape.size(), b2, 0.0, 0);
    const std::vector<double> ys = measure(A, n, shape.size(), sum, 0.0, 0);
    for (long i = 0; i < n; ++i)
        CHECK(ys[i] == doctest::Approx(y1[i] + y2[i]).epsilon(1e-12));
}

TEST_CASE("make_model rounds n down and records the effective delta") {
    const MeasurementModel m = make_model({2, 15}, 0.5, 1); // 0.5 * 225 = 112.5
    CHECK(m.n == 112);
    CHECK(m.signal_len == 225);
    CHECK(m.delta == doctest::Approx(112.0 / 225.0).epsilon(1e-15));
    CHECK_THROWS_AS(make_model({1, 4}, 0.1, 1), ValidationError); // n < 1
}
