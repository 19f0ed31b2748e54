#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "varq/ingest.hpp"

namespace varq {

// GJR-GARCH(1,1): sigma2_t = omega + (alpha + gamma 1[r_{t-1}<0]) r_{t-1}^2
//                            + beta sigma2_{t-1}.
struct GjrParams {
    double omega = 0.0;
    double alpha = 0.0;
    double gamma = 0.0;
    double beta = 0.0;

    bool valid() const {
        return omega > 0.0 && alpha >= 0.0 && gamma >= 0.0 && beta >= 0.0 &&
               alpha + 0.5 * gamma + beta < 1.0;
    }
    double long_run_variance() const { return omega / (1.0 - alpha - 0.5 * gamma - beta); }
};

struct GjrFitError : std::runtime_error {
    GjrFitError(const std::string& what, GjrParams best, double qll)
        : std::runtime_error(what), best_so_far(best), best_qll(qll) {}
    GjrParams best_so_far;
    double best_qll;
};

// Conditional variance path with sigma2[0] = mean square of r (the sample
// variance of the demeaned returns callers pass in).
std::vector<double> gjr_variance_path(std::span<const double> r, const GjrParams& p);

// Gaussian quasi-log-likelihood (up to the constant term) of demeaned returns.
double gjr_qll(std::span<const double> r, const GjrParams& p);

// QMLE by Nelder-Mead from a standard start plus `restarts` random restarts.
GjrParams fit_gjr(std::span<const double> r, std::uint64_t seed = 0, int restarts = 5);

struct StandardizedSeries {
    std::vector<double> z;      // (r - mean)/sigma on IS+OOS
    std::vector<double> sigma;  // conditional standard deviations
    double mean = 0.0;          // subtracted in-sample mean
    std::size_t split = 0;      // first OOS index (relative to the output)
};

// sigma filtered over the IS range with fitted params and iterated
// one-step-ahead through the OOS range feeding realized returns; indices are
// into `returns`, and the output covers [is.begin, oos.end).
StandardizedSeries standardize(const ReturnSeries& returns, const GjrParams& params,
                               IndexRange is, IndexRange oos);

}  // namespace varq
