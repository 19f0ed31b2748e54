#include "varq/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace varq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double mad_tau(std::span<const double> z, std::span<const double> c, double tau,
               std::size_t from) {
    if (z.size() != c.size()) throw std::invalid_argument("mad_tau: length mismatch");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t t = from; t < z.size(); ++t) {
        if (std::isnan(c[t])) continue;
        acc += (z[t] - c[t]) * (tau - (z[t] < c[t] ? 1.0 : 0.0));
        ++n;
    }
    if (n == 0) throw std::invalid_argument("mad_tau: no defined forecasts");
    return acc / static_cast<double>(n);
}

namespace {

// Gaussian step in every coordinate, scaled by delta times the box width.
void propose(std::span<const double> x, std::span<const std::pair<double, double>> bounds,
             double delta, Rng& rng, std::vector<double>& out) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    out.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double width = bounds[i].second - bounds[i].first;
        out[i] = x[i] + delta * width * gauss(rng);
    }
}

bool in_box(std::span<const double> x, std::span<const std::pair<double, double>> bounds) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] >= bounds[i].first && x[i] <= bounds[i].second)) return false;
    return true;
}

double calibrate_t0(const Objective& objective, std::span<const double> start,
                    std::span<const std::pair<double, double>> bounds,
                    const FeasiblePred& feasible, double delta, double f0, Rng& rng) {
    std::vector<double> uphill;
    std::vector<double> cand;
    for (int i = 0; i < 200; ++i) {
        propose(start, bounds, delta, rng, cand);
        if (!in_box(cand, bounds) || (feasible && !feasible(cand))) continue;
        const double f = objective(cand);
        if (f > f0 && std::isfinite(f)) uphill.push_back(f - f0);
    }
    if (uphill.empty()) return 1.0;
    auto mid = uphill.begin() + static_cast<std::ptrdiff_t>(uphill.size() / 2);
    std::nth_element(uphill.begin(), mid, uphill.end());
    return *mid / std::log(1.0 / 0.8);
}

}  // namespace

AnnealResult anneal(const Objective& objective, std::span<const double> start,
                    std::span<const std::pair<double, double>> bounds,
                    const FeasiblePred& feasible, const AnnealingSchedule& schedule,
                    Rng& rng) {
    if (start.size() != bounds.size())
        throw std::invalid_argument("anneal: start/bounds dimension mismatch");
    if (!in_box(start, bounds) || (feasible && !feasible(start)))
        throw std::invalid_argument("anneal: start point infeasible");

    AnnealResult res;
    res.x.assign(start.begin(), start.end());
    res.value = objective(start);
    res.n_evals = 1;

    double delta = schedule.delta0;
    double temp = schedule.t0;
    if (!(temp > 0.0)) {
        temp = calibrate_t0(objective, start, bounds, feasible, delta, res.value, rng);
        res.n_evals += 200;
    }
    res.t0_used = temp;

    std::vector<double> x(start.begin(), start.end());
    double fx = res.value;
    std::vector<double> cand;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const std::size_t moves =
        static_cast<std::size_t>(schedule.kappa) * std::max<std::size_t>(x.size(), 1);
    double a_prev = -1.0;  // no reference ratio before the first stage
    int stall = 0;

    while (delta >= schedule.delta_min) {
        std::size_t accepted = 0;
        for (std::size_t m = 0; m < moves; ++m) {
            propose(x, bounds, delta, rng, cand);
            if (!in_box(cand, bounds) || (feasible && !feasible(cand))) continue;
            const double f = objective(cand);
            ++res.n_evals;
            if (!std::isfinite(f)) continue;
            const double d = f - fx;
            if (d <= 0.0 || unif(rng) < std::exp(-d / temp)) {
                x = cand;
                fx = f;
                ++accepted;
                if (fx < res.value) {
                    res.value = fx;
                    res.x = x;
                }
            }
        }
        ++res.n_stages;
        const double a = static_cast<double>(accepted) / static_cast<double>(moves);
        const bool keep = a_prev >= 0.0 && a >= schedule.phi * a_prev &&
                          stall < schedule.max_stall;
        if (keep) {
            ++stall;
        } else {
            temp *= schedule.lambda1;
            delta *= schedule.lambda2;
            stall = 0;
        }
        a_prev = a;
    }
    return res;
}

FitResult fit_model(const ModelSpec& spec, std::span<const double> z, double tau,
                    double c0, std::size_t eval_from, std::span<const double> proxy,
                    std::uint64_t seed, int n_restarts,
                    const AnnealingSchedule& schedule) {
    FitResult out;
    out.spec = spec;
    out.k = spec.n_params();
    out.c0 = c0;
    out.eval_from = eval_from;

    if (out.k == 0) {
        // HS/WHS: nothing to estimate; loss follows from the filter.
        auto path = spec.filter({}, z, tau, c0, proxy);
        out.loss = mad_tau(z, path.c_hat, tau, eval_from);
        out.converged = true;
        return out;
    }
    if (n_restarts < 1) throw std::invalid_argument("fit_model: n_restarts must be >= 1");

    const auto bounds = spec.bounds(tau);
    Objective objective = [&](std::span<const double> p) {
        return model_loss(spec, p, z, tau, c0, proxy, eval_from);
    };
    FeasiblePred feas = [&](std::span<const double> p) { return spec.feasible(p, tau); };

    double best = kInf;
    bool any = false;
    for (int r = 0; r < n_restarts; ++r) {
        Rng rng = make_stream(seed, "fit/" + spec.name(), static_cast<std::uint64_t>(r));

        std::vector<double> start(bounds.size());
        bool ok = false;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
            for (std::size_t i = 0; i < bounds.size(); ++i)
                start[i] = bounds[i].first + unif(rng) * (bounds[i].second - bounds[i].first);
            ok = spec.feasible(start, tau) && std::isfinite(objective(start));
        }
        if (!ok) continue;

        AnnealResult res = anneal(objective, start, bounds, feas, schedule, rng);
        ++out.restarts_used;
        if (!any || res.value < best) {
            any = true;
            best = res.value;
            out.params = res.x;
        }
    }
    if (!any)
        throw FitError("fit_model: no feasible starting point found for " + spec.name());
    out.loss = best;
    out.converged = true;
    return out;
}

double info_criterion(double mad, std::size_t T, int k, Penalty penalty, bool* degenerate) {
    if (degenerate) *degenerate = false;
    if (mad < 0.0) throw std::invalid_argument("info_criterion: negative MAD");
    if (mad == 0.0) {
        if (degenerate) *degenerate = true;
        return -kInf;
    }
    const double p = penalty == Penalty::AIC
                         ? 2.0 * static_cast<double>(k)
                         : static_cast<double>(k) * std::log(static_cast<double>(T));
    return 2.0 * static_cast<double>(T) * std::log(mad) + p;
}

ModelChoice select_model(double dyn_loss, int dyn_k, double const_loss, std::size_t T,
                         Penalty penalty) {
    const double ic_dyn = info_criterion(dyn_loss, T, dyn_k, penalty);
    const double ic_const = info_criterion(const_loss, T, 1, penalty);
    return ic_dyn < ic_const ? ModelChoice::Dynamic : ModelChoice::Constant;
}

}  // namespace varq
