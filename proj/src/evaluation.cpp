#include "varq/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "varq/rng.hpp"

namespace varq {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double xlogy(double x, double y) { return x > 0.0 ? x * std::log(y) : 0.0; }
}  // namespace

double rmse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("rmse: length mismatch");
    if (a.empty()) throw std::invalid_argument("rmse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

double rmse(std::span<const double> a, double b) {
    if (a.empty()) throw std::invalid_argument("rmse: empty input");
    double acc = 0.0;
    for (double v : a) acc += (v - b) * (v - b);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

double coverage(std::span<const std::uint8_t> d) {
    if (d.empty()) throw std::invalid_argument("coverage: empty input");
    double x = 0.0;
    for (auto v : d) x += v;
    return x / static_cast<double>(d.size());
}

double subsample_coverage_rmse(std::span<const std::uint8_t> d, double tau,
                               std::size_t block) {
    const std::size_t n_blocks = d.size() / block;
    if (n_blocks == 0) throw std::invalid_argument("subsample_coverage_rmse: series too short");
    double acc = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        double x = 0.0;
        for (std::size_t i = 0; i < block; ++i) x += d[b * block + i];
        const double dev = x / static_cast<double>(block) - tau;
        acc += dev * dev;
    }
    return std::sqrt(acc / static_cast<double>(n_blocks));
}

namespace {

int sign3(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

void check_rank_sizes(std::span<const double> a1, std::span<const double> a2,
                      std::span<const double> b1, std::span<const double> b2) {
    if (a1.size() != a2.size() || a1.size() != b1.size() || a1.size() != b2.size())
        throw std::invalid_argument("ranking_agreement: length mismatch");
    if (a1.empty()) throw std::invalid_argument("ranking_agreement: empty input");
}

}  // namespace

double ranking_agreement(std::span<const double> loss_a1, std::span<const double> loss_a2,
                         std::span<const double> loss_b1, std::span<const double> loss_b2) {
    check_rank_sizes(loss_a1, loss_a2, loss_b1, loss_b2);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < loss_a1.size(); ++i)
        if (sign3(loss_a1[i] - loss_a2[i]) == sign3(loss_b1[i] - loss_b2[i])) ++agree;
    return static_cast<double>(agree) / static_cast<double>(loss_a1.size());
}

double conditional_ranking_agreement(std::span<const double> loss_a1,
                                     std::span<const double> loss_a2,
                                     std::span<const double> loss_b1,
                                     std::span<const double> loss_b2) {
    check_rank_sizes(loss_a1, loss_a2, loss_b1, loss_b2);
    std::size_t agree = 0, total = 0;
    for (std::size_t i = 0; i < loss_a1.size(); ++i) {
        if (!(loss_a2[i] < loss_a1[i])) continue;
        ++total;
        if (sign3(loss_a1[i] - loss_a2[i]) == sign3(loss_b1[i] - loss_b2[i])) ++agree;
    }
    return total ? static_cast<double>(agree) / static_cast<double>(total) : kNan;
}

double chi2_sf1(double x) {
    if (x < 0.0) return 1.0;
    return std::erfc(std::sqrt(0.5 * x));
}

TestResult kupiec_test(std::span<const std::uint8_t> d, double tau) {
    if (d.empty()) throw std::invalid_argument("kupiec_test: empty input");
    const double T = static_cast<double>(d.size());
    double x = 0.0;
    for (auto v : d) x += v;
    const double pi = x / T;
    const double ll_null = xlogy(T - x, 1.0 - tau) + xlogy(x, tau);
    const double ll_alt = xlogy(T - x, 1.0 - pi) + xlogy(x, pi);
    TestResult res;
    res.method = "kupiec_lr_uc";
    res.statistic = std::max(0.0, -2.0 * (ll_null - ll_alt));
    res.pvalue = chi2_sf1(res.statistic);
    return res;
}

namespace {

struct TransitionCounts {
    double n00 = 0.0, n01 = 0.0, n10 = 0.0, n11 = 0.0;
};

double signed_lr(const TransitionCounts& n, double tau, bool* degenerate) {
    const double n0 = n.n00 + n.n01;
    const double n1 = n.n10 + n.n11;
    if (degenerate) *degenerate = false;
    if (n1 == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    const double pi01 = n0 > 0.0 ? n.n01 / n0 : 0.0;
    const double pi11 = n.n11 / n1;
    const double pi = (n.n01 + n.n11) / (n0 + n1);
    const double ll_alt = xlogy(n.n00, 1.0 - pi01) + xlogy(n.n01, pi01) +
                          xlogy(n.n10, 1.0 - pi11) + xlogy(n.n11, pi11);
    const double ll_null = xlogy(n.n00 + n.n10, 1.0 - pi) + xlogy(n.n01 + n.n11, pi);
    const double lr = std::max(0.0, -2.0 * (ll_null - ll_alt));
    return static_cast<double>(sign3(pi11 - tau)) * lr;
}

}  // namespace

double slrt_statistic(std::span<const std::uint8_t> d, double tau, bool* degenerate) {
    if (d.size() < 2) throw std::invalid_argument("slrt_statistic: need at least 2 points");
    TransitionCounts n;
    for (std::size_t t = 1; t < d.size(); ++t) {
        if (d[t - 1])
            (d[t] ? n.n11 : n.n10) += 1.0;
        else
            (d[t] ? n.n01 : n.n00) += 1.0;
    }
    return signed_lr(n, tau, degenerate);
}

SlrtNull::SlrtNull(std::size_t T, double tau, std::size_t n_mc, std::uint64_t seed) {
    if (T < 2 || n_mc < 1000) throw std::invalid_argument("SlrtNull: T >= 2, n_mc >= 1000");
    stats_.resize(n_mc);
    Rng rng = make_stream(seed, "slrt-null");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t r = 0; r < n_mc; ++r) {
        TransitionCounts n;
        bool prev = unif(rng) < tau;
        for (std::size_t t = 1; t < T; ++t) {
            const bool cur = unif(rng) < tau;
            if (prev)
                (cur ? n.n11 : n.n10) += 1.0;
            else
                (cur ? n.n01 : n.n00) += 1.0;
            prev = cur;
        }
        stats_[r] = signed_lr(n, tau, nullptr);  // degenerates kept as 0
    }
    std::sort(stats_.begin(), stats_.end());
}

double SlrtNull::observed_side_p(double stat) const {
    const double n = static_cast<double>(stats_.size());
    if (stat >= 0.0) {
        const auto it = std::lower_bound(stats_.begin(), stats_.end(), stat);
        return static_cast<double>(stats_.end() - it) / n;
    }
    const auto it = std::upper_bound(stats_.begin(), stats_.end(), stat);
    return static_cast<double>(it - stats_.begin()) / n;
}

double SlrtNull::upper_tail_p(double stat) const {
    const double n = static_cast<double>(stats_.size());
    const auto lo = std::lower_bound(stats_.begin(), stats_.end(), stat);
    const auto hi = std::upper_bound(lo, stats_.end(), stat);
    const double above = static_cast<double>(stats_.end() - hi);
    const double equal = static_cast<double>(hi - lo);
    return (above + 0.5 * equal) / n;
}

double SlrtNull::lower_tail_p(double stat) const { return 1.0 - upper_tail_p(stat); }

double SlrtNull::quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("SlrtNull::quantile");
    const std::size_t idx = static_cast<std::size_t>(
        q * static_cast<double>(stats_.size() - 1) + 0.5);
    return stats_[std::min(idx, stats_.size() - 1)];
}

TestResult slrt_mc_pvalue(double stat, bool degenerate, const SlrtNull& null_table) {
    TestResult res;
    res.method = "slrt_mc";
    res.n_mc = null_table.size();
    res.statistic = stat;
    res.degenerate = degenerate;
    res.pvalue = null_table.observed_side_p(stat);
    return res;
}

TestResult slrt_mc_pvalue(double stat, std::size_t T, double tau, std::size_t n_mc,
                          std::uint64_t seed) {
    SlrtNull null_table(T, tau, n_mc, seed);
    return slrt_mc_pvalue(stat, false, null_table);
}

int binomial_critical_count(int n, double alpha) {
    if (n < 1 || !(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("binomial_critical_count");
    // pmf via logs to stay exact enough for small n.
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        double lp = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                    k * std::log(alpha) + (n - k) * std::log(1.0 - alpha);
        pmf[static_cast<std::size_t>(k)] = std::exp(lp);
    }
    double tail = 0.0;
    for (int k = n; k >= 0; --k) {
        tail += pmf[static_cast<std::size_t>(k)];
        if (tail > alpha) return k + 1;
    }
    return 0;
}

int two_stage_counts(const std::vector<std::vector<std::uint8_t>>& outcomes, double alpha) {
    if (outcomes.empty()) return 0;
    const std::size_t n_years = outcomes.front().size();
    for (const auto& row : outcomes)
        if (row.size() != n_years)
            throw std::invalid_argument("two_stage_counts: ragged grid");
    if (n_years == 0) return 0;
    const int kstar = binomial_critical_count(static_cast<int>(n_years), alpha);
    int total = 0;
    for (const auto& row : outcomes) {
        int c = 0;
        for (auto v : row) c += v != 0;
        if (c >= kstar) ++total;
    }
    return total;
}

double delta_mad(std::span<const double> x, std::span<const double> q_model,
                 std::span<const double> q_const, double tau) {
    if (x.size() != q_model.size() || x.size() != q_const.size())
        throw std::invalid_argument("delta_mad: length mismatch");
    if (x.empty()) throw std::invalid_argument("delta_mad: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pm = (x[i] - q_model[i]) * (tau - (x[i] < q_model[i] ? 1.0 : 0.0));
        const double pc = (x[i] - q_const[i]) * (tau - (x[i] < q_const[i] ? 1.0 : 0.0));
        acc += pm - pc;
    }
    return 250.0 * acc / static_cast<double>(x.size());
}

Wtl win_tie_lose(double mad_model_oos, double mad_const_oos, bool selected) {
    if (!selected || mad_model_oos == mad_const_oos) return Wtl::Tie;
    return mad_model_oos < mad_const_oos ? Wtl::Win : Wtl::Lose;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> ord(n);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[ord[j + 1]] == v[ord[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[ord[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman");
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("spearman: constant input");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace varq
