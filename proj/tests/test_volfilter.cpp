#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "varq/volfilter.hpp"

using namespace varq;

namespace {

// Simulate a GJR-GARCH(1,1) path with standard normal innovations.
std::vector<double> simulate_gjr(const GjrParams& p, std::size_t T, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> r(T);
    double s2 = p.long_run_variance();
    for (std::size_t t = 0; t < T; ++t) {
        r[t] = std::sqrt(s2) * n(gen);
        s2 = p.omega + (p.alpha + (r[t] < 0.0 ? p.gamma : 0.0)) * r[t] * r[t] + p.beta * s2;
    }
    return r;
}

// Variance convention of the library: callers pass demeaned returns, so the
// starting variance is the plain mean square.
double sample_variance(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s / static_cast<double>(r.size());
}

// Per-observation Gaussian quasi-log-likelihood terms, recomputed here
// independently of the production code path.
std::vector<double> qll_terms(const std::vector<double>& r, const std::array<double, 4>& th) {
    const double omega = th[0], alpha = th[1], gamma = th[2], beta = th[3];
    std::vector<double> out(r.size());
    double s2 = sample_variance(r);
    for (std::size_t t = 0; t < r.size(); ++t) {
        out[t] = -0.5 * (std::log(s2) + r[t] * r[t] / s2);
        s2 = omega + (alpha + (r[t] < 0.0 ? gamma : 0.0)) * r[t] * r[t] + beta * s2;
    }
    return out;
}

// Sandwich (QMLE) standard errors at theta by finite differences:
// Cov = H^{-1} S H^{-1} / T with H the Hessian of the mean log-likelihood and
// S the outer product of per-observation scores.
std::array<double, 4> qmle_standard_errors(const std::vector<double>& r,
                                           const std::array<double, 4>& th) {
    const std::size_t T = r.size();
    const double eps = 1e-5;
    // scores: T x 4 via central differences
    std::vector<std::array<double, 4>> score(T);
    for (int j = 0; j < 4; ++j) {
        std::array<double, 4> hi = th, lo = th;
        double h = eps * std::max(1.0, std::abs(th[j]));
        hi[j] += h;
        lo[j] -= h;
        auto fhi = qll_terms(r, hi), flo = qll_terms(r, lo);
        for (std::size_t t = 0; t < T; ++t) score[t][j] = (fhi[t] - flo[t]) / (2.0 * h);
    }
    // mean log-likelihood for the Hessian
    auto mean_ll = [&](const std::array<double, 4>& x) {
        auto f = qll_terms(r, x);
        double s = 0.0;
        for (double v : f) s += v;
        return s / static_cast<double>(T);
    };
    double H[4][4];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double hi = eps * std::max(1.0, std::abs(th[i]));
            double hj = eps * std::max(1.0, std::abs(th[j]));
            auto sh = [&](int a, double da, int b, double db) {
                std::array<double, 4> x = th;
                x[a] += da;
                x[b] += db;
                return mean_ll(x);
            };
            H[i][j] = (sh(i, hi, j, hj) - sh(i, hi, j, -hj) - sh(i, -hi, j, hj) +
                       sh(i, -hi, j, -hj)) /
                      (4.0 * hi * hj);
        }
    double S[4][4] = {};
    for (std::size_t t = 0; t < T; ++t)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) S[i][j] += score[t][i] * score[t][j];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) S[i][j] /= static_cast<double>(T);

    // invert H (4x4 Gauss-Jordan)
    double A[4][8] = {};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) A[i][j] = H[i][j];
        A[i][4 + i] = 1.0;
    }
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int rr = c + 1; rr < 4; ++rr)
            if (std::abs(A[rr][c]) > std::abs(A[piv][c])) piv = rr;
        for (int j = 0; j < 8; ++j) std::swap(A[c][j], A[piv][j]);
        double d = A[c][c];
        for (int j = 0; j < 8; ++j) A[c][j] /= d;
        for (int rr = 0; rr < 4; ++rr) {
            if (rr == c) continue;
            double f = A[rr][c];
            for (int j = 0; j < 8; ++j) A[rr][j] -= f * A[c][j];
        }
    }
    double Hinv[4][4];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) Hinv[i][j] = A[i][4 + j];

    std::array<double, 4> se{};
    for (int i = 0; i < 4; ++i) {
        double v = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) v += Hinv[i][a] * S[a][b] * Hinv[b][i];
        se[i] = std::sqrt(std::abs(v) / static_cast<double>(T));
    }
    return se;
}

}  // namespace

TEST_CASE("variance path starts at the sample variance and stays positive") {
    GjrParams p{0.05, 0.05, 0.10, 0.85};
    auto r = simulate_gjr(p, 2000, 1);
    auto s2 = gjr_variance_path(r, p);
    REQUIRE(s2.size() == r.size());
    CHECK(s2[0] == doctest::Approx(sample_variance(r)).epsilon(1e-10));
    for (double v : s2) CHECK(v > 0.0);
    CHECK(s2[1] == doctest::Approx(p.omega +
                                   (p.alpha + (r[0] < 0 ? p.gamma : 0.0)) * r[0] * r[0] +
                                   p.beta * s2[0])
                       .epsilon(1e-12));
}

TEST_CASE("gjr_qll matches the independent per-term computation") {
    GjrParams p{0.05, 0.05, 0.10, 0.85};
    auto r = simulate_gjr(p, 500, 2);
    auto terms = qll_terms(r, {p.omega, p.alpha, p.gamma, p.beta});
    double sum = 0.0;
    for (double v : terms) sum += v;
    CHECK(gjr_qll(r, p) == doctest::Approx(sum).epsilon(1e-9));
}

TEST_CASE("fit on i.i.d. Gaussian data finds a nearly unconditional model") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> r(5000);
    for (auto& v : r) v = n(gen);
    GjrParams p = fit_gjr(r, 42);
    CHECK(p.valid());
    CHECK(p.long_run_variance() == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("parameters of a simulated GJR process are recovered within 3 QMLE SEs") {
    GjrParams truth{0.05, 0.05, 0.10, 0.85};
    auto r = simulate_gjr(truth, 20000, 4);
    GjrParams p = fit_gjr(r, 42);
    auto se = qmle_standard_errors(r, {p.omega, p.alpha, p.gamma, p.beta});
    CAPTURE(p.omega);
    CAPTURE(p.alpha);
    CAPTURE(p.gamma);
    CAPTURE(p.beta);
    CHECK(std::abs(p.omega - truth.omega) < 3.0 * se[0]);
    CHECK(std::abs(p.alpha - truth.alpha) < 3.0 * se[1]);
    CHECK(std::abs(p.gamma - truth.gamma) < 3.0 * se[2]);
    CHECK(std::abs(p.beta - truth.beta) < 3.0 * se[3]);
}

TEST_CASE("constant (zero-variance) series cannot be fitted") {
    std::vector<double> r(1000, 0.0);
    CHECK_THROWS_AS(fit_gjr(r, 1), GjrFitError);
}

TEST_CASE("homoskedastic parameters reduce standardization to division by sqrt(omega)") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> n(0.0, 2.0);
    ReturnSeries s;
    for (int t = 0; t < 800; ++t) s.values.push_back(n(gen));

    GjrParams p{4.0, 0.0, 0.0, 0.0};
    StandardizedSeries st = standardize(s, p, {0, 600}, {600, 800});
    REQUIRE(st.z.size() == 800);
    CHECK(st.split == 600);
    // t = 0 uses the in-sample mean square as the starting variance; with
    // alpha = gamma = beta = 0 every later step is exactly omega.
    std::vector<double> is_part(s.values.begin(), s.values.begin() + 600);
    CHECK(st.sigma[0] == doctest::Approx(std::sqrt(sample_variance(is_part))).epsilon(1e-12));
    for (std::size_t t = 1; t < 800; ++t) {
        CHECK(st.sigma[t] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(st.z[t] == doctest::Approx(s.values[t] / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("first OOS sigma comes from the recursion on the last IS return") {
    GjrParams p{0.05, 0.05, 0.10, 0.85};
    ReturnSeries s;
    for (double v : simulate_gjr(p, 700, 6)) s.values.push_back(v);
    StandardizedSeries st = standardize(s, p, {0, 600}, {600, 700});
    const double r_last = s.values[599];
    const double s2_last = st.sigma[599] * st.sigma[599];
    const double expect =
        p.omega + (p.alpha + (r_last < 0 ? p.gamma : 0.0)) * r_last * r_last + p.beta * s2_last;
    CHECK(st.sigma[600] * st.sigma[600] == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(standardize(s, p, {0, 600}, {601, 700}), std::invalid_argument);
}

TEST_CASE("fitted standardization leaves IS innovations with variance near 1") {
    GjrParams truth{0.05, 0.05, 0.10, 0.85};
    ReturnSeries s;
    for (double v : simulate_gjr(truth, 2000, 7)) s.values.push_back(v);
    GjrParams p = fit_gjr(std::span(s.values).subspan(0, 1600), 42);
    StandardizedSeries st = standardize(s, p, {0, 1600}, {1600, 2000});
    std::vector<double> zis(st.z.begin(), st.z.begin() + 1600);
    CHECK(sample_variance(zis) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("rescaling returns rescales sigma and leaves z nearly unchanged") {
    GjrParams truth{0.05, 0.05, 0.10, 0.85};
    auto r = simulate_gjr(truth, 4000, 8);
    std::vector<double> rk = r;
    for (auto& v : rk) v *= 3.0;
    GjrParams p1 = fit_gjr(r, 42);
    GjrParams p2 = fit_gjr(rk, 42);
    CHECK(std::sqrt(p2.omega) == doctest::Approx(3.0 * std::sqrt(p1.omega)).epsilon(0.05));
    auto s1 = gjr_variance_path(r, p1);
    auto s2 = gjr_variance_path(rk, p2);
    for (std::size_t t = 0; t < r.size(); t += 97)
        CHECK(r[t] / std::sqrt(s1[t]) == doctest::Approx(rk[t] / std::sqrt(s2[t])).epsilon(1e-3));
}
