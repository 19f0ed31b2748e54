#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varq/qmodels.hpp"
#include "varq/rng.hpp"

namespace varq {

// Asymmetric mean absolute deviation (pinball) loss, averaged over indices
// t >= from with a defined forecast (NaN forecasts are warm-up and skipped).
double mad_tau(std::span<const double> z, std::span<const double> c, double tau,
               std::size_t from = 0);

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adaptive simulated annealing schedule. Proposals are Gaussian random-walk
// increments with per-coordinate standard deviation delta_n times the box
// width; kappa moves per parameter are evaluated at each temperature. If the
// stage acceptance ratio a_n >= phi * a_{n-1} the temperature and proposal
// scale stay put; otherwise T <- lambda1 T and delta <- lambda2 delta. The
// search stops once delta_n < delta_min.
//
// t0 <= 0 requests auto-calibration: 200 random proposals from the start
// point, t0 = median uphill move / ln(1/0.8), so the median uphill move is
// initially accepted with probability ~0.8. max_stall bounds the number of
// consecutive stages without cooling (the raw rule can hold the temperature
// indefinitely when acceptance is stable).
struct AnnealingSchedule {
    double delta0 = 1.0;
    int kappa = 50;
    double phi = 0.5;
    double lambda1 = 0.95;
    double lambda2 = 0.95;
    double delta_min = 1e-7;
    double t0 = 0.0;
    int max_stall = 2;
};

struct AnnealResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t n_evals = 0;
    std::size_t n_stages = 0;
    double t0_used = 0.0;
};

using Objective = std::function<double(std::span<const double>)>;
using FeasiblePred = std::function<bool(std::span<const double>)>;

// Minimizes objective over the box, rejecting proposals outside it or failing
// `feasible`. Returns the best point ever evaluated (never worse than the
// start, never infeasible). Deterministic given the rng state.
AnnealResult anneal(const Objective& objective, std::span<const double> start,
                    std::span<const std::pair<double, double>> bounds,
                    const FeasiblePred& feasible, const AnnealingSchedule& schedule,
                    Rng& rng);

struct FitResult {
    ModelSpec spec;
    std::vector<double> params;
    double loss = 0.0;        // in-sample MAD over t >= eval_from
    int restarts_used = 0;
    int k = 0;                // number of free parameters
    bool converged = false;
    double c0 = 0.0;
    std::size_t eval_from = 0;
};

// Best of n_restarts annealing runs from uniform-in-bounds feasible starts.
// c0 seeds recursive filters; proxy is required for GARCQ. HS/WHS have no
// free parameters: their loss is computed directly from the filter. Ties
// between restarts break toward the lowest restart index.
FitResult fit_model(const ModelSpec& spec, std::span<const double> z, double tau,
                    double c0, std::size_t eval_from, std::span<const double> proxy,
                    std::uint64_t seed, int n_restarts = 20,
                    const AnnealingSchedule& schedule = {});

enum class Penalty { AIC, BIC };

// IC(T,k) = 2 T ln(MAD) + p(T,k); AIC p = 2k, BIC p = k ln T.
// mad == 0 yields -infinity and sets *degenerate when provided.
double info_criterion(double mad, std::size_t T, int k, Penalty penalty,
                      bool* degenerate = nullptr);

enum class ModelChoice { Dynamic, Constant };

// Dynamic iff IC(dynamic) < IC(constant); the constant model has k = 1.
ModelChoice select_model(double dyn_loss, int dyn_k, double const_loss, std::size_t T,
                         Penalty penalty);

}  // namespace varq
