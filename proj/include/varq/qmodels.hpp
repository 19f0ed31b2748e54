#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace varq {

// One-step-ahead conditional tau-quantile predictions aligned with z.
// c_hat[t] depends only on information through t-1; entries before valid_from
// are NaN (warm-up) and excluded from losses. d[t] = 1[z_t < c_hat_t], strict.
struct QuantilePath {
    std::vector<double> c_hat;
    std::vector<std::uint8_t> d;
    double tau = 0.0;
    std::size_t valid_from = 0;
};

// MT update would flip the sign of the predicted quantile. This is treated as
// an estimation infeasibility, never clamped.
struct SignFlipError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ModelKind { Const, HS, WHS, GARCQ, CAViaR, QPI, TT, MT };

// A conditional-quantile predictor: kind + fixed hyperparameters + the shape
// of its free parameter vector. Free parameters live in `params` passed to
// filter(); bounds()/feasible() define the estimation search region.
//
// Parameter vector layouts:
//   Const:  {c}
//   GARCQ:  {omega, alpha1[, alpha2], beta}
//   CAViaR: {alpha}
//   QPI:    {omega, alpha1[, alpha2], beta}
//   TT:     {lambda, theta_l, theta_h, beta_l, beta_h}
//   MT:     {lambda, alpha1[, alpha2]}
// HS and WHS carry no free parameters.
struct ModelSpec {
    ModelKind kind = ModelKind::Const;
    int lags = 1;               // GARCQ/QPI/TT/MT only
    int hs_window = 250;        // HS
    double whs_lambda = 0.99;   // WHS
    double caviar_g = 10.0;     // CAViaR logistic steepness

    // Accepted names: const, hs250, hs1000, whs95, whs99, garcq, garcq2,
    // caviar, qpi, qpi2, tt, tt2, mt, mt2.
    static ModelSpec parse(const std::string& name);
    std::string name() const;

    int n_params() const;
    bool is_parametric() const { return n_params() > 0; }
    bool needs_proxy() const { return kind == ModelKind::GARCQ; }

    // First index with a defined forecast.
    std::size_t warm_up() const;

    std::vector<std::pair<double, double>> bounds(double tau) const;
    bool feasible(std::span<const double> params, double tau) const;

    // Run the one-step-ahead filter over z. c0 seeds recursive filters;
    // proxy is the realized-quantile path (GARCQ only).
    QuantilePath filter(std::span<const double> params, std::span<const double> z,
                        double tau, double c0,
                        std::span<const double> proxy = {}) const;
};

// Interpolated empirical quantile over the last N standardized observations:
// q = z^(l) + (tau N - floor(tau N)) (z^(h) - z^(l)), l = floor(tau N)+1.
double hs_quantile(std::span<const double> window, double tau);

// Exponentially-weighted empirical quantile over the full history, weights
// lambda^(age) normalized; bracket search with linear interpolation in the
// cumulative weights. When tau falls below the smallest cumulative weight the
// smallest observation is returned and *clipped (if given) is set.
double whs_quantile(std::span<const double> history, double lambda, double tau,
                    bool* clipped = nullptr);

enum class RealizedQuantileMethod { HS, WHS };

// proxy[t] = empirical quantile of data through t-1 (NaN during warm-up).
// hyper is the HS window N or the WHS lambda.
std::vector<double> rolling_realized_quantiles(std::span<const double> z,
                                               RealizedQuantileMethod method, double hyper,
                                               double tau);

// p_t = lambda p_{t-1} + (1-lambda) d_t, seeded at p0.
std::vector<double> exp_smooth_violations(std::span<const std::uint8_t> d, double lambda,
                                          double p0);

QuantilePath filter_constant(double c, std::size_t length, std::span<const double> z,
                             double tau);
QuantilePath filter_garcq(std::span<const double> params, int lags,
                          std::span<const double> proxy, std::span<const double> z,
                          double c0, double tau);
QuantilePath filter_caviar(double alpha, double g, std::span<const double> z, double c0,
                           double tau);
QuantilePath filter_qpi(std::span<const double> params, int lags, std::span<const double> z,
                        double c0, double tau);
QuantilePath filter_tt(std::span<const double> params, int lags, std::span<const double> z,
                       double c0, double tau);
QuantilePath filter_mt(std::span<const double> params, int lags, std::span<const double> z,
                       double c0, double tau);

// Allocation-free in-sample loss of a parametric model: runs the same
// recursion as ModelSpec::filter and accumulates the asymmetric MAD over
// t >= eval_from on the fly. Infeasible recursions (MT sign flip) return
// +infinity instead of throwing so that optimizers can reject them cheaply.
double model_loss(const ModelSpec& spec, std::span<const double> params,
                  std::span<const double> z, double tau, double c0,
                  std::span<const double> proxy, std::size_t eval_from);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace varq
