#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace varq {

struct TestResult {
    double statistic = 0.0;
    double pvalue = 1.0;
    std::string method;
    std::size_t n_mc = 0;  // Monte Carlo replications (0 if analytic)
    bool degenerate = false;
};

double rmse(std::span<const double> a, std::span<const double> b);
double rmse(std::span<const double> a, double b);

double coverage(std::span<const std::uint8_t> d);

// RMSE of per-block violation frequencies against tau over consecutive
// blocks; a trailing partial block is dropped.
double subsample_coverage_rmse(std::span<const std::uint8_t> d, double tau,
                               std::size_t block = 250);

// Fraction of subsamples where criteria A and B order the two models the same
// way. Ties agree only with ties.
double ranking_agreement(std::span<const double> loss_a1, std::span<const double> loss_a2,
                         std::span<const double> loss_b1, std::span<const double> loss_b2);

// Same fraction restricted to subsamples where criterion A strictly prefers
// model 2 (loss_a2 < loss_a1). Returns NaN when the condition never holds.
double conditional_ranking_agreement(std::span<const double> loss_a1,
                                     std::span<const double> loss_a2,
                                     std::span<const double> loss_b1,
                                     std::span<const double> loss_b2);

// Survival function of the chi-squared distribution with one degree of
// freedom, P(X > x).
double chi2_sf1(double x);

// Kupiec unconditional-coverage likelihood ratio with analytic chi^2(1)
// p-value; x=0 and x=T use the 0 ln 0 = 0 likelihood limit.
TestResult kupiec_test(std::span<const std::uint8_t> d, double tau);

// Signed likelihood ratio of first-order Markov dependence:
// sign(pi11_hat - tau) * LR. Degenerate (and zero) when no violation is
// followed by any observation.
double slrt_statistic(std::span<const std::uint8_t> d, double tau, bool* degenerate = nullptr);

// Shared Monte Carlo null for the signed LR statistic at fixed (T, tau):
// n_mc i.i.d. Bernoulli(tau) series, statistics kept sorted. Building the
// table once amortizes the simulation across many observed series.
class SlrtNull {
public:
    SlrtNull(std::size_t T, double tau, std::size_t n_mc, std::uint64_t seed);

    // One-sided tail frequency on the side of the observed sign:
    // P(S >= s) when s >= 0, P(S <= s) when s < 0.
    double observed_side_p(double stat) const;
    // Mid-p upper tail, P(S > s) + P(S = s)/2; uniform under the null up to
    // the statistic's discreteness.
    double upper_tail_p(double stat) const;
    double lower_tail_p(double stat) const;

    std::size_t size() const { return stats_.size(); }
    double quantile(double q) const;

private:
    std::vector<double> stats_;  // sorted
};

// Convenience one-shot wrapper around SlrtNull (observed-side p-value).
TestResult slrt_mc_pvalue(double stat, std::size_t T, double tau, std::size_t n_mc,
                          std::uint64_t seed);
TestResult slrt_mc_pvalue(double stat, bool degenerate, const SlrtNull& null_table);

// Smallest k with P(Binomial(n, alpha) >= k) <= alpha (exact tails).
int binomial_critical_count(int n, double alpha);

// outcomes[portfolio][year] = first-stage rejection flag. Counts portfolios
// whose rejection count reaches the second-stage binomial critical value.
int two_stage_counts(const std::vector<std::vector<std::uint8_t>>& outcomes,
                     double alpha = 0.05);

// 250 x mean over the supplied (observation) pairs of
// pinball(x, q_model) - pinball(x, q_const). Works in z-space (delta MAD)
// and in return-space (Delta MAD) alike.
double delta_mad(std::span<const double> x, std::span<const double> q_model,
                 std::span<const double> q_const, double tau);

enum class Wtl { Win, Tie, Lose };

// Tie when the dynamic model was not selected in-sample or the OOS losses
// coincide exactly; otherwise Win iff the model's loss is strictly lower.
Wtl win_tie_lose(double mad_model_oos, double mad_const_oos, bool selected);

// Spearman rank correlation (average ranks on ties).
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace varq
