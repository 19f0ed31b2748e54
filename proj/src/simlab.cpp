#include "varq/simlab.hpp"

#include <cmath>

#include "varq/rng.hpp"

namespace varq {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::vector<double> sine_quantile_path(const SimConfig& config) {
    config.validate();
    const double root = 1.0 / std::sqrt(2.0 * config.tau);
    const double level = -0.5 * (root + 1.0);
    const double amp = 0.5 * (root - 1.0);
    std::vector<double> c(config.S);
    for (std::size_t i = 0; i < config.S; ++i) {
        const double s = static_cast<double>(i + 1);
        c[i] = level + amp * std::sin(2.0 * kPi * config.f * s / static_cast<double>(config.S));
    }
    return c;
}

SimPath simulate(const SimConfig& config) {
    SimPath path;
    path.c_true = sine_quantile_path(config);
    path.p.resize(config.S);
    path.z.resize(config.S);
    path.d_true.resize(config.S);
    Rng rng = make_stream(config.seed, "sim");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < config.S; ++i) {
        const double c = path.c_true[i];
        const double p = 0.5 / (c * c);
        path.p[i] = p;
        const double u = unif(rng);
        path.z[i] = u < p ? c : (u >= 1.0 - p ? -c : 0.0);
        path.d_true[i] = u < config.tau ? 1 : 0;
    }
    return path;
}

namespace {

// F(z|w) = w 1[z >= -1] (1 - e^{-1-z}) + (1-w) 1[z <= 1] e^{-1+z}.
double mixture_cdf(double z, double w) {
    double f = 0.0;
    if (z >= -1.0) f += w * (1.0 - std::exp(-1.0 - z));
    if (z <= 1.0)
        f += (1.0 - w) * std::exp(-1.0 + z);
    else
        f += 1.0 - w;
    return f;
}

}  // namespace

double mixture_quantile(double tau, double w) {
    if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("tau must be in (0, 1/2)");
    double lo = -60.0, hi = 60.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mixture_cdf(mid, w) < tau ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double mixture_unconditional_quantile(double tau) { return mixture_quantile(tau, 0.5); }

MixtureEval mixture_eval(double tau, int x) {
    if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("tau must be in (0, 1/2)");
    if (x != 0 && x != 1) throw std::invalid_argument("x must be 0 or 1");

    // w_t = 0.2 + 0.6 x + (2x-1)(-0.6 + 0.75 nu), nu ~ Bernoulli(0.8).
    const double w_nu0 = x == 1 ? 0.2 : 0.8;   // probability 0.2
    const double w_nu1 = x == 1 ? 0.95 : 0.05; // probability 0.8
    const double w_bar = 0.2 + 0.6 * static_cast<double>(x);

    MixtureEval out;
    if (x == 1 && tau < 0.009) {
        // All three quantiles sit in the pure left tail where
        // F(z|w) = (1-w) e^{-1+z}, hence q = 1 + ln(tau/(1-w)).
        out.expected_actual_quantile = 1.0 + 1.2 * std::log(2.0) + std::log(5.0) + std::log(tau);
        out.conditional_quantile = 1.0 + std::log(5.0) + std::log(tau);
    } else {
        out.expected_actual_quantile =
            0.2 * mixture_quantile(tau, w_nu0) + 0.8 * mixture_quantile(tau, w_nu1);
        out.conditional_quantile = mixture_quantile(tau, w_bar);
    }
    out.bias = out.expected_actual_quantile - out.conditional_quantile;
    return out;
}

GpdMaxQuantile gpd_max_quantile(double tau) {
    if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("tau must be in (0, 1/2)");
    const double l = std::log(2.0 * tau);
    const double alpha_star = 2.0 * l / (1.0 + l);
    if (!(alpha_star > 2.0))
        throw std::domain_error("gpd_max_quantile: tail index at most 2 (infinite variance)");
    GpdMaxQuantile out;
    out.alpha_star = alpha_star;
    out.q_star = std::pow(2.0 * tau, -(1.0 + l) / (2.0 * l)) / std::sqrt(-l);
    return out;
}

}  // namespace varq
