#include "varq/volfilter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "varq/rng.hpp"

namespace varq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_variance(std::span<const double> r) {
    if (r.empty()) return 0.0;
    double acc = 0.0;
    for (double v : r) acc += v * v;
    return acc / static_cast<double>(r.size());
}

}  // namespace

std::vector<double> gjr_variance_path(std::span<const double> r, const GjrParams& p) {
    std::vector<double> s2(r.size());
    if (r.empty()) return s2;
    s2[0] = sample_variance(r);
    for (std::size_t t = 1; t < r.size(); ++t) {
        const double rp = r[t - 1];
        const double arch = p.alpha + (rp < 0.0 ? p.gamma : 0.0);
        s2[t] = p.omega + arch * rp * rp + p.beta * s2[t - 1];
    }
    return s2;
}

double gjr_qll(std::span<const double> r, const GjrParams& p) {
    const auto s2 = gjr_variance_path(r, p);
    double ll = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) {
        if (!(s2[t] > 0.0)) return -kInf;
        ll -= 0.5 * (std::log(s2[t]) + r[t] * r[t] / s2[t]);
    }
    return ll;
}

namespace {

// Negative QLL on variance-normalized returns; x = {omega, alpha, gamma, beta}
// in normalized units. Infeasible points get a graded penalty so Nelder-Mead
// can walk back into the feasible region.
struct GjrObjective {
    std::span<const double> rn;  // returns divided by their sample std

    double operator()(const double* x) const {
        GjrParams p{x[0], x[1], x[2], x[3]};
        double viol = 0.0;
        if (!(p.omega > 0.0)) viol += 1.0 + std::abs(p.omega);
        if (p.alpha < 0.0) viol += -p.alpha;
        if (p.gamma < 0.0) viol += -p.gamma;
        if (p.beta < 0.0) viol += -p.beta;
        const double pers = p.alpha + 0.5 * p.gamma + p.beta;
        if (pers >= 1.0) viol += pers - 1.0 + 1e-6;
        if (viol > 0.0) return 1e10 * (1.0 + viol);
        const double ll = gjr_qll(rn, p);
        return std::isfinite(ll) ? -ll : 1e10;
    }
};

// Plain Nelder-Mead in 4 dimensions.
template <typename F>
std::pair<std::array<double, 4>, double> nelder_mead(const F& f,
                                                     const std::array<double, 4>& x0,
                                                     double scale, int max_iter,
                                                     double tol) {
    constexpr int n = 4;
    std::array<std::array<double, 4>, n + 1> v;
    std::array<double, n + 1> fv;
    for (int i = 0; i <= n; ++i) {
        v[i] = x0;
        if (i > 0) v[i][i - 1] += scale * (x0[i - 1] != 0.0 ? std::abs(x0[i - 1]) : 0.05);
        fv[i] = f(v[i].data());
    }
    std::array<int, n + 1> ord;
    for (int it = 0; it < max_iter; ++it) {
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int lo = ord[0], hi = ord[n], nh = ord[n - 1];
        if (std::abs(fv[hi] - fv[lo]) <= tol * (std::abs(fv[lo]) + tol)) break;

        std::array<double, 4> cen{};  // centroid excluding the worst vertex
        for (int i = 0; i <= n; ++i)
            if (i != hi)
                for (int j = 0; j < n; ++j) cen[j] += v[i][j] / n;

        auto blend = [&](double w) {
            std::array<double, 4> x;
            for (int j = 0; j < n; ++j) x[j] = cen[j] + w * (cen[j] - v[hi][j]);
            return x;
        };
        auto xr = blend(1.0);
        const double fr = f(xr.data());
        if (fr < fv[lo]) {
            auto xe = blend(2.0);
            const double fe = f(xe.data());
            if (fe < fr) {
                v[hi] = xe;
                fv[hi] = fe;
            } else {
                v[hi] = xr;
                fv[hi] = fr;
            }
        } else if (fr < fv[nh]) {
            v[hi] = xr;
            fv[hi] = fr;
        } else {
            auto xc = blend(fr < fv[hi] ? 0.5 : -0.5);
            const double fc = f(xc.data());
            if (fc < std::min(fr, fv[hi])) {
                v[hi] = xc;
                fv[hi] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == lo) continue;
                    for (int j = 0; j < n; ++j) v[i][j] = v[lo][j] + 0.5 * (v[i][j] - v[lo][j]);
                    fv[i] = f(v[i].data());
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    return {v[best], fv[best]};
}

}  // namespace

GjrParams fit_gjr(std::span<const double> r, std::uint64_t seed, int restarts) {
    const double var = sample_variance(r);
    if (!(var > 0.0) || !std::isfinite(var))
        throw GjrFitError("fit_gjr: degenerate (zero-variance) series", {}, -kInf);

    // Normalize to unit variance so tolerances are scale-free; omega is
    // rescaled back at the end.
    const double sd = std::sqrt(var);
    std::vector<double> rn(r.size());
    for (std::size_t t = 0; t < r.size(); ++t) rn[t] = r[t] / sd;
    GjrObjective obj{rn};

    std::array<double, 4> best_x{};
    double best_f = kInf;
    auto try_start = [&](const std::array<double, 4>& x0) {
        auto [x, fx] = nelder_mead(obj, x0, 0.5, 2000, 1e-10);
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
    };

    try_start({0.05, 0.05, 0.05, 0.85});
    Rng rng = make_stream(seed, "gjr");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < restarts; ++i) {
        const double a = 0.15 * unif(rng);
        const double g = 0.20 * unif(rng);
        const double b = 0.5 + 0.45 * unif(rng);
        const double pers = a + 0.5 * g + b;
        if (pers >= 0.999) {
            --i;  // resample; keep the number of effective restarts fixed
            continue;
        }
        try_start({std::max(1.0 - pers, 1e-4), a, g, b});
    }

    GjrParams p{best_x[0] * var, best_x[1], best_x[2], best_x[3]};
    if (!(best_f < 1e9) || !p.valid())
        throw GjrFitError("fit_gjr: no feasible optimum found", p, -best_f);
    return p;
}

StandardizedSeries standardize(const ReturnSeries& returns, const GjrParams& params,
                               IndexRange is, IndexRange oos) {
    if (is.end != oos.begin || is.size() == 0 || oos.end > returns.values.size())
        throw std::invalid_argument("standardize: malformed IS/OOS ranges");

    const std::span<const double> r(returns.values);
    StandardizedSeries out;
    out.mean = returns.mean_is;
    out.split = is.size();

    const std::size_t n = is.size() + oos.size();
    std::vector<double> s2(n);
    s2[0] = sample_variance(r.subspan(is.begin, is.size()));
    for (std::size_t t = 1; t < n; ++t) {
        const double rp = r[is.begin + t - 1];
        const double arch = params.alpha + (rp < 0.0 ? params.gamma : 0.0);
        s2[t] = params.omega + arch * rp * rp + params.beta * s2[t - 1];
    }

    out.sigma.resize(n);
    out.z.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        out.sigma[t] = std::sqrt(s2[t]);
        out.z[t] = r[is.begin + t] / out.sigma[t];
    }
    return out;
}

}  // namespace varq
