#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "varq/simlab.hpp"

using namespace varq;

TEST_CASE("sine quantile path hits the stated extremes and midline") {
    SimConfig cfg;
    cfg.tau = 0.05;
    cfg.S = 100000;
    cfg.f = 20.0;  // cycle = 5000
    auto c = sine_quantile_path(cfg);
    // s = 1250: sin(2 pi * 20 * 1250 / 1e5) = sin(pi/2) = 1
    CHECK(c[1249] == doctest::Approx(-1.0).epsilon(1e-12));
    // s = 3750: sin(3 pi / 2) = -1
    CHECK(c[3749] == doctest::Approx(-3.16228).epsilon(1e-5));
    CHECK(c[3749] == doctest::Approx(-1.0 / std::sqrt(0.1)).epsilon(1e-9));
    // s = 2500: sin(pi) = 0
    CHECK(c[2499] == doctest::Approx(-2.08114).epsilon(1e-5));
    for (double v : c) {
        CHECK(v <= -1.0 + 1e-12);
        CHECK(v >= -1.0 / std::sqrt(0.1) - 1e-12);
    }
}

TEST_CASE("three-point law: support, probabilities and exact moments") {
    SimConfig cfg;
    cfg.tau = 0.05;
    cfg.S = 100000;
    cfg.f = 20.0;
    cfg.seed = 11;
    SimPath path = simulate(cfg);
    REQUIRE(path.z.size() == cfg.S);
    REQUIRE(path.d_true.size() == cfg.S);
    std::size_t at_crest = 1249;  // c = -1, p = 1/2: support {-1, +1}, no zero
    CHECK(path.p[at_crest] == doctest::Approx(0.5).epsilon(1e-9));
    for (std::size_t i = 0; i < cfg.S; ++i) {
        const double c = path.c_true[i];
        const double p = path.p[i];
        // probability/support identity gives exact zero mean and unit variance:
        // E z = p*c + p*(-c) = 0, V z = 2 p c^2 = 2 p / (2p) = 1
        CHECK(p == doctest::Approx(0.5 / (c * c)).epsilon(1e-12));
        CHECK(2.0 * p * c * c == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p >= cfg.tau - 1e-12);
        CHECK(p <= 0.5 + 1e-12);
        const bool on_support =
            path.z[i] == c || path.z[i] == -c || path.z[i] == 0.0;
        CHECK(on_support);
    }
}

TEST_CASE("sample moments satisfy the CLT bounds at desk scale") {
    SimConfig cfg;
    cfg.tau = 0.05;
    cfg.S = 100000;
    cfg.f = 20.0;
    cfg.seed = 5;
    SimPath path = simulate(cfg);
    double mean = 0.0;
    for (double v : path.z) mean += v;
    mean /= static_cast<double>(cfg.S);
    double var = 0.0;
    for (double v : path.z) var += (v - mean) * (v - mean);
    var /= static_cast<double>(cfg.S);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("true-path violations are Bernoulli(tau) via the latent uniform") {
    SimConfig cfg;
    cfg.tau = 0.05;
    cfg.S = 100000;
    cfg.f = 20.0;
    cfg.seed = 7;
    SimPath path = simulate(cfg);
    double rate = 0.0;
    for (auto d : path.d_true) rate += d;
    rate /= static_cast<double>(cfg.S);
    const double se = std::sqrt(cfg.tau * (1.0 - cfg.tau) / static_cast<double>(cfg.S));
    CHECK(std::abs(rate - cfg.tau) < 3.0 * se);
    // a true-path violation can only happen on the lower atom
    for (std::size_t i = 0; i < cfg.S; ++i)
        if (path.d_true[i]) CHECK(path.z[i] == path.c_true[i]);
    // the strict sample comparison alone never fires (the atom ties c_true)
    for (std::size_t i = 0; i < cfg.S; ++i) CHECK_FALSE(path.z[i] < path.c_true[i]);
}

TEST_CASE("simulation streams are reproducible") {
    SimConfig cfg;
    cfg.tau = 0.05;
    cfg.S = 20000;
    cfg.f = 4.0;
    cfg.seed = 99;
    SimPath a = simulate(cfg);
    SimPath b = simulate(cfg);
    for (std::size_t i = 0; i < cfg.S; ++i) CHECK(a.z[i] == b.z[i]);
    cfg.seed = 100;
    SimPath c = simulate(cfg);
    bool differs = false;
    for (std::size_t i = 0; i < cfg.S && !differs; ++i) differs = a.z[i] != c.z[i];
    CHECK(differs);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.tau = 0.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.tau = 0.05;
    cfg.S = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("mixture closed forms match the cited constants") {
    MixtureEval e = mixture_eval(0.005, 1);
    CHECK(std::abs(e.expected_actual_quantile - (-1.8571)) < 1e-4);
    CHECK(std::abs(e.conditional_quantile - (-2.6889)) < 1e-4);
    CHECK(std::abs(e.bias - 0.8318) < 1e-4);
    CHECK(e.bias == doctest::Approx(1.2 * std::log(2.0)).epsilon(1e-9));
    CHECK(e.bias == doctest::Approx(0.831777).epsilon(1e-5));
    // bias is flat in tau on the closed-form branch
    for (double tau : {0.001, 0.004, 0.008})
        CHECK(mixture_eval(tau, 1).bias == doctest::Approx(1.2 * std::log(2.0)).epsilon(1e-6));
    CHECK_THROWS_AS(mixture_eval(0.6, 1), std::invalid_argument);
    CHECK_THROWS_AS(mixture_eval(0.05, 2), std::invalid_argument);
}

TEST_CASE("mixture numeric inversion agrees with the closed form in the deep tail") {
    // with weight 0.8 on the right-side component the tau < 0.009 quantile is
    // 1 + ln 5 + ln tau
    const double tau = 0.005;
    CHECK(mixture_quantile(tau, 0.8) ==
          doctest::Approx(1.0 + std::log(5.0) + std::log(tau)).epsilon(1e-7));
    // inversion property: the quantile is where the CDF crosses tau
    for (double w : {0.2, 0.5, 0.95})
        for (double t : {0.01, 0.05, 0.2}) {
            double q = mixture_quantile(t, w);
            double f = 0.0;
            if (q >= -1.0) f += w * (1.0 - std::exp(-1.0 - q));
            if (q <= 1.0) f += (1.0 - w) * std::exp(-1.0 + q);
            CHECK(f == doctest::Approx(t).epsilon(1e-8));
        }
}

TEST_CASE("unconditional mixture quantile at 5%") {
    CHECK(mixture_unconditional_quantile(0.05) ==
          doctest::Approx(-1.302585).epsilon(1e-6));
    CHECK(mixture_unconditional_quantile(0.05) ==
          doctest::Approx(1.0 + std::log(0.1)).epsilon(1e-9));
}

TEST_CASE("generalized Pareto maximal quantiles") {
    GpdMaxQuantile a = gpd_max_quantile(0.10);
    CHECK(std::abs(a.q_star - 1.0691) < 5e-4);
    GpdMaxQuantile b = gpd_max_quantile(0.05);
    CHECK(std::abs(b.q_star - 1.2640) < 5e-4);
    GpdMaxQuantile c = gpd_max_quantile(0.01);
    CHECK(std::abs(c.q_star - 2.1684) < 5e-4);
    // alpha* formula and the finite-variance requirement
    const double l = std::log(2.0 * 0.05);
    CHECK(b.alpha_star == doctest::Approx(2.0 * l / (1.0 + l)).epsilon(1e-12));
    CHECK(b.alpha_star > 2.0);
    CHECK_THROWS_AS(gpd_max_quantile(0.3), std::domain_error);
}
