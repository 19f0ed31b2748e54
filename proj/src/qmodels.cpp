#include "varq/qmodels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace varq {

namespace {

// History length before the first WHS forecast is considered defined. The
// spec leaves the WHS start-up unspecified ("all available data"); below ~100
// observations the tau = 1% bracket rarely exists and the clipped-minimum
// fallback would dominate the loss.
constexpr std::size_t kWhsWarmup = 100;

void check_lags(int lags) {
    if (lags != 1 && lags != 2) throw std::invalid_argument("lags must be 1 or 2");
}

inline std::uint8_t violated(double z, double c) { return z < c ? 1 : 0; }

}  // namespace

double hs_quantile(std::span<const double> window, double tau) {
    const std::size_t n = window.size();
    const std::size_t floor_tn = static_cast<std::size_t>(std::floor(tau * static_cast<double>(n)));
    const std::size_t l = floor_tn + 1;  // 1-based order statistics
    const std::size_t h = floor_tn + 2;
    if (n < h)
        throw InsufficientDataError("hs_quantile: window of " + std::to_string(n) +
                                    " too short for tau=" + std::to_string(tau));
    std::vector<double> sorted(window.begin(), window.end());
    // Only the lowest h order statistics matter.
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(h - 1),
                     sorted.end());
    std::sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(h));
    const double zl = sorted[l - 1];
    const double zh = sorted[h - 1];
    const double frac = tau * static_cast<double>(n) - static_cast<double>(floor_tn);
    return zl + frac * (zh - zl);
}

double whs_quantile(std::span<const double> history, double lambda, double tau, bool* clipped) {
    if (history.empty()) throw InsufficientDataError("whs_quantile: empty history");
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must be in (0,1)");
    if (clipped) *clipped = false;

    const std::size_t n = history.size();
    // history[i]: i = 0 oldest; age of history[i] is n-1-i.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return history[a] < history[b]; });

    const double norm = (1.0 - lambda) / (1.0 - std::pow(lambda, static_cast<double>(n)));
    double cum = 0.0;
    double prev_cum = 0.0;
    double prev_z = history[order[0]];
    for (std::size_t k = 0; k < n; ++k) {
        const double age = static_cast<double>(n - 1 - order[k]);
        const double w = norm * std::pow(lambda, age);
        prev_cum = cum;
        cum += w;
        const double zk = history[order[k]];
        if (cum > tau) {
            if (k == 0) {
                // tau below the smallest cumulative weight: no bracket exists.
                if (clipped) *clipped = true;
                return zk;
            }
            return prev_z + (tau - prev_cum) / (cum - prev_cum) * (zk - prev_z);
        }
        prev_z = zk;
    }
    // tau >= total weight (only reachable through rounding); largest value.
    return history[order[n - 1]];
}

namespace {

// Incremental WHS over the full expanding history. Keeps (value, time)
// pairs sorted by value; the bracket walk accumulates weights in sorted
// order until it crosses tau. Truncating old observations is not safe here:
// the crossing can be bracketed by an ancient observation whose weight is of
// the same order as the entire dropped tail (ratio lambda/(1-lambda),
// independent of the cutoff), so any truncation can move the quantile by a
// full value gap.
class RollingWhs {
public:
    RollingWhs(double lambda, double tau) : lambda_(lambda), tau_(tau) {}

    void push(double z, std::size_t r) {
        auto it = std::lower_bound(buf_.begin(), buf_.end(), std::make_pair(z, r));
        buf_.insert(it, {z, r});
    }

    // Quantile of everything pushed so far; `now` = t, history is z[0..t-1].
    double quantile(std::size_t now) const {
        ensure_pow(now);
        const double norm =
            (1.0 - lambda_) / (1.0 - std::pow(lambda_, static_cast<double>(now)));
        double cum = 0.0, prev_cum = 0.0, prev_z = buf_.front().first;
        for (std::size_t k = 0; k < buf_.size(); ++k) {
            const std::size_t age = now - 1 - buf_[k].second;
            const double w = norm * pow_at(age);
            prev_cum = cum;
            cum += w;
            const double zk = buf_[k].first;
            if (cum > tau_) {
                if (k == 0) return zk;  // clipped at the minimum
                return prev_z + (tau_ - prev_cum) / (cum - prev_cum) * (zk - prev_z);
            }
            prev_z = zk;
        }
        return buf_.back().first;
    }

private:
    // Each power comes from std::pow so the walk reproduces whs_quantile
    // bit for bit; iterated multiplication drifts enough to flip brackets.
    // The table stops once it underflows to zero.
    void ensure_pow(std::size_t n) const {
        while (pow_.size() < n && (pow_.empty() || pow_.back() != 0.0))
            pow_.push_back(std::pow(lambda_, static_cast<double>(pow_.size())));
    }
    double pow_at(std::size_t age) const {
        return age < pow_.size() ? pow_[age] : 0.0;
    }

    double lambda_, tau_;
    mutable std::vector<double> pow_;
    std::vector<std::pair<double, std::size_t>> buf_;  // sorted by (value, time)
};

// Incremental HS: sorted fixed window with insert/expire by binary search.
class RollingHs {
public:
    RollingHs(std::size_t n, double tau) : n_(n), tau_(tau) {
        std::size_t floor_tn = static_cast<std::size_t>(std::floor(tau * static_cast<double>(n)));
        l_ = floor_tn;      // 0-based index of z^(l)
        h_ = floor_tn + 1;  // 0-based index of z^(h)
        frac_ = tau * static_cast<double>(n) - std::floor(tau * static_cast<double>(n));
        if (n < h_ + 1)
            throw InsufficientDataError("rolling HS: window too short for tau");
        sorted_.reserve(n + 1);
    }

    void push(double z) {
        time_order_.push_back(z);
        sorted_.insert(std::lower_bound(sorted_.begin(), sorted_.end(), z), z);
        if (sorted_.size() > n_) {
            double old = time_order_[time_order_.size() - 1 - n_];
            sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), old));
        }
    }

    bool full() const { return sorted_.size() == n_; }

    double quantile() const { return sorted_[l_] + frac_ * (sorted_[h_] - sorted_[l_]); }

private:
    std::size_t n_, l_, h_;
    double tau_, frac_;
    std::vector<double> sorted_;
    std::vector<double> time_order_;
};

}  // namespace

std::vector<double> rolling_realized_quantiles(std::span<const double> z,
                                               RealizedQuantileMethod method, double hyper,
                                               double tau) {
    const std::size_t T = z.size();
    std::vector<double> proxy(T, kNaN);
    if (method == RealizedQuantileMethod::HS) {
        const std::size_t n = static_cast<std::size_t>(hyper);
        RollingHs roll(n, tau);
        for (std::size_t t = 0; t < T; ++t) {
            if (t > 0) roll.push(z[t - 1]);
            if (roll.full()) proxy[t] = roll.quantile();
        }
    } else {
        RollingWhs roll(hyper, tau);
        for (std::size_t t = 0; t < T; ++t) {
            if (t > 0) roll.push(z[t - 1], t - 1);
            if (t >= kWhsWarmup) proxy[t] = roll.quantile(t);
        }
    }
    return proxy;
}

std::vector<double> exp_smooth_violations(std::span<const std::uint8_t> d, double lambda,
                                          double p0) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must be in (0,1)");
    std::vector<double> p(d.size());
    double prev = p0;
    for (std::size_t t = 0; t < d.size(); ++t) {
        prev = lambda * prev + (1.0 - lambda) * static_cast<double>(d[t]);
        p[t] = prev;
    }
    return p;
}

QuantilePath filter_constant(double c, std::size_t length, std::span<const double> z,
                             double tau) {
    if (!z.empty() && z.size() != length)
        throw std::invalid_argument("filter_constant: z length mismatch");
    QuantilePath path;
    path.tau = tau;
    path.c_hat.assign(length, c);
    path.d.assign(length, 0);
    for (std::size_t t = 0; t < z.size(); ++t) path.d[t] = violated(z[t], c);
    return path;
}

QuantilePath filter_garcq(std::span<const double> params, int lags,
                          std::span<const double> proxy, std::span<const double> z,
                          double c0, double tau) {
    check_lags(lags);
    const double omega = params[0];
    const double a1 = params[1];
    const double a2 = lags == 2 ? params[2] : 0.0;
    const double beta = params[lags == 2 ? 3 : 2];
    if (beta < 0.0 || a1 + a2 < 0.0 || (lags == 1 && a1 < 0.0) || (lags == 2 && a2 < 0.0) ||
        a1 + a2 + beta >= 1.0)
        throw std::invalid_argument("filter_garcq: parameter constraints violated");
    if (proxy.size() != z.size())
        throw std::invalid_argument("filter_garcq: proxy not aligned with z");

    const std::size_t T = z.size();
    QuantilePath path;
    path.tau = tau;
    path.c_hat.assign(T, kNaN);
    path.d.assign(T, 0);

    // First index where all required proxy lags exist.
    std::size_t start = 0;
    while (start < T && std::isnan(proxy[start])) ++start;
    start += static_cast<std::size_t>(lags - 1);
    path.valid_from = std::min(start, T);
    if (start >= T) return path;

    path.c_hat[start] = c0;
    path.d[start] = violated(z[start], c0);
    for (std::size_t t = start + 1; t < T; ++t) {
        double c = omega + a1 * proxy[t - 1] + beta * path.c_hat[t - 1];
        if (lags == 2) c += a2 * proxy[t - 2];
        path.c_hat[t] = c;
        path.d[t] = violated(z[t], c);
    }
    return path;
}

QuantilePath filter_caviar(double alpha, double g, std::span<const double> z, double c0,
                           double tau) {
    if (!(alpha > 0.0)) throw std::invalid_argument("filter_caviar: alpha must be > 0");
    const std::size_t T = z.size();
    QuantilePath path;
    path.tau = tau;
    path.c_hat.assign(T, kNaN);
    path.d.assign(T, 0);
    if (T == 0) return path;
    path.c_hat[0] = c0;
    path.d[0] = violated(z[0], c0);
    for (std::size_t t = 1; t < T; ++t) {
        const double cp = path.c_hat[t - 1];
        const double u = g * (z[t - 1] - cp);
        double logi;
        if (u > 36.0)
            logi = 0.0;
        else if (u < -36.0)
            logi = 1.0;
        else
            logi = 1.0 / (1.0 + std::exp(u));
        const double c = cp - alpha * (logi - tau);
        path.c_hat[t] = c;
        path.d[t] = violated(z[t], c);
    }
    return path;
}

QuantilePath filter_qpi(std::span<const double> params, int lags, std::span<const double> z,
                        double c0, double tau) {
    check_lags(lags);
    const double omega = params[0];
    const double a1 = params[1];
    const double a2 = lags == 2 ? params[2] : 0.0;
    const double beta = params[lags == 2 ? 3 : 2];
    if (!(beta > 0.0 && beta < 1.0) || (lags == 1 && !(a1 > 0.0)) || (lags == 2 && a1 + a2 < 0.0))
        throw std::invalid_argument("filter_qpi: parameter constraints violated");

    const std::size_t T = z.size();
    QuantilePath path;
    path.tau = tau;
    path.c_hat.assign(T, kNaN);
    path.d.assign(T, 0);
    if (T == 0) return path;
    path.c_hat[0] = c0;
    path.d[0] = violated(z[0], c0);
    for (std::size_t t = 1; t < T; ++t) {
        double c = omega + a1 * (tau - static_cast<double>(path.d[t - 1])) +
                   beta * path.c_hat[t - 1];
        // Pre-sample indicators are taken at their expectation tau.
        if (lags == 2 && t >= 2) c += a2 * (tau - static_cast<double>(path.d[t - 2]));
        path.c_hat[t] = c;
        path.d[t] = violated(z[t], c);
    }
    return path;
}

QuantilePath filter_tt(std::span<const double> params, int lags, std::span<const double> z,
                       double c0, double tau) {
    check_lags(lags);
    const double lambda = params[0];
    const double theta_l = params[1];
    const double theta_h = params[2];
    const double beta_l = params[3];
    const double beta_h = params[4];
    if (!(lambda > 0.0 && lambda < 1.0) || !(theta_l >= 0.0 && theta_l <= tau) ||
        !(theta_h >= tau && theta_h <= 1.0) || !(beta_l > 0.0) || !(beta_h > 0.0))
        throw std::invalid_argument("filter_tt: parameter constraints violated");
    if (lags == 1 && !(beta_l <= 1.0 && beta_h >= 1.0))
        throw std::invalid_argument("filter_tt: lag-1 requires beta_l <= 1 <= beta_h");
    if (!(c0 < 0.0)) throw std::invalid_argument("filter_tt: c0 must be negative");

    const std::size_t T = z.size();
    QuantilePath path;
    path.tau = tau;
    path.c_hat.assign(T, kNaN);
    path.d.assign(T, 0);
    if (T == 0) return path;
    path.c_hat[0] = c0;
    path.d[0] = violated(z[0], c0);

    double p_prev = tau;  // p_hat_{-1}
    std::uint8_t dl2 = 0, dh2 = 0;  // d^l_{t-2}, d^h_{t-2}; seed p in [theta_l, theta_h]
    for (std::size_t t = 1; t < T; ++t) {
        const double p = lambda * p_prev + (1.0 - lambda) * static_cast<double>(path.d[t - 1]);
        const std::uint8_t dl1 = p < theta_l ? 1 : 0;
        const std::uint8_t dh1 = p > theta_h ? 1 : 0;
        double c;
        if (lags == 2 && ((dl1 && dl2) || (dh1 && dh2))) {
            // Same-side signals at both lags cancel exactly (beta * 1/beta).
            c = path.c_hat[t - 1];
        } else {
            double m = 1.0 + static_cast<double>(dl1) * (beta_l - 1.0) +
                       static_cast<double>(dh1) * (beta_h - 1.0);
            if (lags == 2)
                m *= 1.0 + static_cast<double>(dl2) * (1.0 / beta_l - 1.0) +
                     static_cast<double>(dh2) * (1.0 / beta_h - 1.0);
            c = path.c_hat[t - 1] * m;
        }
        path.c_hat[t] = c;
        path.d[t] = violated(z[t], c);
        p_prev = p;
        dl2 = dl1;
        dh2 = dh1;
    }
    return path;
}

QuantilePath filter_mt(std::span<const double> params, int lags, std::span<const double> z,
                       double c0, double tau) {
    check_lags(lags);
    const double lambda = params[0];
    const double a1 = params[1];
    const double a2 = lags == 2 ? params[2] : 0.0;
    const double cap = 1.0 / std::log1p(tau);
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("filter_mt: lambda must be in (0,1)");
    if (lags == 1 && !(a1 >= 0.0 && a1 < cap))
        throw std::invalid_argument("filter_mt: alpha must be in [0, 1/ln(1+tau))");
    if (lags == 2 && !(a1 + a2 >= 0.0 && a1 + a2 < cap))
        throw std::invalid_argument("filter_mt: alpha1+alpha2 must be in [0, 1/ln(1+tau))");
    if (!(c0 < 0.0)) throw std::invalid_argument("filter_mt: c0 must be negative");

    const std::size_t T = z.size();
    QuantilePath path;
    path.tau = tau;
    path.c_hat.assign(T, kNaN);
    path.d.assign(T, 0);
    if (T == 0) return path;
    path.c_hat[0] = c0;
    path.d[0] = violated(z[0], c0);

    const double ltau = std::log1p(tau);
    double p1 = tau, p2 = tau;  // p_hat_{t-1}, p_hat_{t-2}
    for (std::size_t t = 1; t < T; ++t) {
        p2 = p1;
        p1 = lambda * p1 + (1.0 - lambda) * static_cast<double>(path.d[t - 1]);
        double bracket = 1.0 + a1 * (std::log1p(p1) - ltau);
        if (lags == 2 && t >= 2) bracket += a2 * (std::log1p(p2) - ltau);
        if (!(bracket > 0.0))
            throw SignFlipError("filter_mt: multiplicative bracket non-positive at t=" +
                                std::to_string(t));
        const double c = bracket * path.c_hat[t - 1];
        path.c_hat[t] = c;
        path.d[t] = violated(z[t], c);
    }
    return path;
}

ModelSpec ModelSpec::parse(const std::string& name) {
    ModelSpec s;
    if (name == "const") {
        s.kind = ModelKind::Const;
    } else if (name == "hs250") {
        s.kind = ModelKind::HS;
        s.hs_window = 250;
    } else if (name == "hs1000") {
        s.kind = ModelKind::HS;
        s.hs_window = 1000;
    } else if (name == "whs95") {
        s.kind = ModelKind::WHS;
        s.whs_lambda = 0.95;
    } else if (name == "whs99") {
        s.kind = ModelKind::WHS;
        s.whs_lambda = 0.99;
    } else if (name == "garcq" || name == "garcq2") {
        s.kind = ModelKind::GARCQ;
    } else if (name == "caviar") {
        s.kind = ModelKind::CAViaR;
    } else if (name == "qpi" || name == "qpi2") {
        s.kind = ModelKind::QPI;
    } else if (name == "tt" || name == "tt2") {
        s.kind = ModelKind::TT;
    } else if (name == "mt" || name == "mt2") {
        s.kind = ModelKind::MT;
    } else {
        throw std::invalid_argument("unknown model name: " + name);
    }
    if (!name.empty() && name.back() == '2') s.lags = 2;
    return s;
}

std::string ModelSpec::name() const {
    switch (kind) {
        case ModelKind::Const:
            return "const";
        case ModelKind::HS:
            return "hs" + std::to_string(hs_window);
        case ModelKind::WHS:
            return whs_lambda < 0.97 ? "whs95" : "whs99";
        case ModelKind::GARCQ:
            return lags == 2 ? "garcq2" : "garcq";
        case ModelKind::CAViaR:
            return "caviar";
        case ModelKind::QPI:
            return lags == 2 ? "qpi2" : "qpi";
        case ModelKind::TT:
            return lags == 2 ? "tt2" : "tt";
        case ModelKind::MT:
            return lags == 2 ? "mt2" : "mt";
    }
    throw std::logic_error("unreachable");
}

int ModelSpec::n_params() const {
    switch (kind) {
        case ModelKind::Const:
            return 1;
        case ModelKind::HS:
        case ModelKind::WHS:
            return 0;
        case ModelKind::GARCQ:
        case ModelKind::QPI:
            return lags == 2 ? 4 : 3;
        case ModelKind::CAViaR:
            return 1;
        case ModelKind::TT:
            return 5;
        case ModelKind::MT:
            return lags == 2 ? 3 : 2;
    }
    throw std::logic_error("unreachable");
}

std::size_t ModelSpec::warm_up() const {
    switch (kind) {
        case ModelKind::HS:
            return static_cast<std::size_t>(hs_window);
        case ModelKind::WHS:
            return kWhsWarmup;
        case ModelKind::GARCQ:
            // WHS99 realized-quantile proxy plus one extra step per lag.
            return kWhsWarmup + static_cast<std::size_t>(lags - 1);
        default:
            return 0;
    }
}

std::vector<std::pair<double, double>> ModelSpec::bounds(double tau) const {
    using B = std::pair<double, double>;
    switch (kind) {
        case ModelKind::Const:
            return {B{-30.0, 0.0}};
        case ModelKind::HS:
        case ModelKind::WHS:
            return {};
        case ModelKind::GARCQ:
            if (lags == 2)
                return {B{-5.0, 5.0}, B{-0.999, 0.999}, B{0.0, 0.999}, B{0.0, 0.999}};
            return {B{-5.0, 5.0}, B{0.0, 0.999}, B{0.0, 0.999}};
        case ModelKind::CAViaR:
            return {B{1e-8, 5.0}};
        case ModelKind::QPI:
            if (lags == 2)
                return {B{-5.0, 5.0}, B{-5.0, 5.0}, B{-5.0, 5.0}, B{1e-6, 0.9999}};
            return {B{-5.0, 5.0}, B{1e-8, 5.0}, B{1e-6, 0.9999}};
        case ModelKind::TT: {
            if (lags == 2)
                return {B{0.8, 0.9999}, B{0.0, tau}, B{tau, 1.0}, B{1e-6, 5.0},
                        B{1e-6, 5.0}};
            return {B{0.8, 0.9999}, B{0.0, tau}, B{tau, 1.0}, B{1e-6, 1.0}, B{1.0, 5.0}};
        }
        case ModelKind::MT: {
            const double cap = 0.9999 / std::log1p(tau);
            if (lags == 2) return {B{0.8, 0.9999}, B{-cap, cap}, B{0.0, cap}};
            return {B{0.8, 0.9999}, B{0.0, cap}};
        }
    }
    throw std::logic_error("unreachable");
}

bool ModelSpec::feasible(std::span<const double> params, double tau) const {
    auto bx = bounds(tau);
    if (params.size() != bx.size()) return false;
    for (std::size_t i = 0; i < bx.size(); ++i)
        if (!(params[i] >= bx[i].first && params[i] <= bx[i].second)) return false;
    switch (kind) {
        case ModelKind::GARCQ: {
            const double a1 = params[1];
            const double a2 = lags == 2 ? params[2] : 0.0;
            const double beta = params[lags == 2 ? 3 : 2];
            return a1 + a2 >= 0.0 && a1 + a2 + beta < 1.0;
        }
        case ModelKind::QPI: {
            if (lags == 2) return params[1] + params[2] >= 0.0;
            return true;
        }
        case ModelKind::MT: {
            const double cap = 1.0 / std::log1p(tau);
            const double sum = lags == 2 ? params[1] + params[2] : params[1];
            return sum >= 0.0 && sum < cap;
        }
        default:
            return true;
    }
}

QuantilePath ModelSpec::filter(std::span<const double> params, std::span<const double> z,
                               double tau, double c0, std::span<const double> proxy) const {
    switch (kind) {
        case ModelKind::Const:
            return filter_constant(params[0], z.size(), z, tau);
        case ModelKind::HS:
        case ModelKind::WHS: {
            auto q = kind == ModelKind::HS
                         ? rolling_realized_quantiles(z, RealizedQuantileMethod::HS,
                                                      static_cast<double>(hs_window), tau)
                         : rolling_realized_quantiles(z, RealizedQuantileMethod::WHS,
                                                      whs_lambda, tau);
            QuantilePath path;
            path.tau = tau;
            path.valid_from = warm_up();
            path.c_hat = std::move(q);
            path.d.assign(z.size(), 0);
            for (std::size_t t = 0; t < z.size(); ++t)
                if (!std::isnan(path.c_hat[t])) path.d[t] = violated(z[t], path.c_hat[t]);
            return path;
        }
        case ModelKind::GARCQ:
            return filter_garcq(params, lags, proxy, z, c0, tau);
        case ModelKind::CAViaR:
            return filter_caviar(params[0], caviar_g, z, c0, tau);
        case ModelKind::QPI:
            return filter_qpi(params, lags, z, c0, tau);
        case ModelKind::TT:
            return filter_tt(params, lags, z, c0, tau);
        case ModelKind::MT:
            return filter_mt(params, lags, z, c0, tau);
    }
    throw std::logic_error("unreachable");
}

namespace {

inline double pinball(double z, double c, double tau) {
    return (z - c) * (tau - (z < c ? 1.0 : 0.0));
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// Hot path for estimation: identical recursions to the filter_* functions but
// without materializing the path. Keep the two in sync (a property test pins
// their equality on random parameter draws).
double model_loss(const ModelSpec& spec, std::span<const double> params,
                  std::span<const double> z, double tau, double c0,
                  std::span<const double> proxy, std::size_t eval_from) {
    const std::size_t T = z.size();
    if (eval_from >= T) throw std::invalid_argument("model_loss: eval_from past end");
    const double denom = static_cast<double>(T - eval_from);
    double acc = 0.0;

    switch (spec.kind) {
        case ModelKind::Const: {
            const double c = params[0];
            for (std::size_t t = eval_from; t < T; ++t) acc += pinball(z[t], c, tau);
            return acc / denom;
        }
        case ModelKind::HS:
        case ModelKind::WHS:
            throw std::invalid_argument("model_loss: HS/WHS have no free parameters");
        case ModelKind::GARCQ: {
            const double omega = params[0];
            const double a1 = params[1];
            const double a2 = spec.lags == 2 ? params[2] : 0.0;
            const double beta = params[spec.lags == 2 ? 3 : 2];
            std::size_t start = 0;
            while (start < T && std::isnan(proxy[start])) ++start;
            start += static_cast<std::size_t>(spec.lags - 1);
            if (start >= T) return kInf;
            double c = c0;
            if (start >= eval_from) acc += pinball(z[start], c, tau);
            if (spec.lags == 2) {
                for (std::size_t t = start + 1; t < T; ++t) {
                    c = omega + a1 * proxy[t - 1] + a2 * proxy[t - 2] + beta * c;
                    if (t >= eval_from) acc += pinball(z[t], c, tau);
                }
            } else {
                for (std::size_t t = start + 1; t < T; ++t) {
                    c = omega + a1 * proxy[t - 1] + beta * c;
                    if (t >= eval_from) acc += pinball(z[t], c, tau);
                }
            }
            return acc / denom;
        }
        case ModelKind::CAViaR: {
            const double alpha = params[0];
            const double g = spec.caviar_g;
            double c = c0;
            if (eval_from == 0) acc += pinball(z[0], c, tau);
            for (std::size_t t = 1; t < T; ++t) {
                const double u = g * (z[t - 1] - c);
                double logi;
                if (u > 36.0)
                    logi = 0.0;
                else if (u < -36.0)
                    logi = 1.0;
                else
                    logi = 1.0 / (1.0 + std::exp(u));
                c -= alpha * (logi - tau);
                if (t >= eval_from) acc += pinball(z[t], c, tau);
            }
            return acc / denom;
        }
        case ModelKind::QPI: {
            const double omega = params[0];
            const double a1 = params[1];
            const double a2 = spec.lags == 2 ? params[2] : 0.0;
            const double beta = params[spec.lags == 2 ? 3 : 2];
            double c = c0;
            double d1 = z[0] < c ? 1.0 : 0.0;
            double d2 = tau;  // pre-sample indicator at expectation
            if (eval_from == 0) acc += pinball(z[0], c, tau);
            if (spec.lags == 2) {
                for (std::size_t t = 1; t < T; ++t) {
                    c = omega + a1 * (tau - d1) + a2 * (tau - d2) + beta * c;
                    if (t >= eval_from) acc += pinball(z[t], c, tau);
                    d2 = d1;
                    d1 = z[t] < c ? 1.0 : 0.0;
                }
            } else {
                for (std::size_t t = 1; t < T; ++t) {
                    c = omega + a1 * (tau - d1) + beta * c;
                    if (t >= eval_from) acc += pinball(z[t], c, tau);
                    d1 = z[t] < c ? 1.0 : 0.0;
                }
            }
            return acc / denom;
        }
        case ModelKind::TT: {
            const double lambda = params[0];
            const double theta_l = params[1];
            const double theta_h = params[2];
            const double beta_l = params[3];
            const double beta_h = params[4];
            double c = c0;
            double p_prev = tau;
            double d_prev = z[0] < c ? 1.0 : 0.0;
            std::uint8_t dl2 = 0, dh2 = 0;
            if (eval_from == 0) acc += pinball(z[0], c, tau);
            for (std::size_t t = 1; t < T; ++t) {
                const double p = lambda * p_prev + (1.0 - lambda) * d_prev;
                const std::uint8_t dl1 = p < theta_l ? 1 : 0;
                const std::uint8_t dh1 = p > theta_h ? 1 : 0;
                if (spec.lags == 2) {
                    if (!((dl1 && dl2) || (dh1 && dh2))) {
                        double m = 1.0 + dl1 * (beta_l - 1.0) + dh1 * (beta_h - 1.0);
                        m *= 1.0 + dl2 * (1.0 / beta_l - 1.0) + dh2 * (1.0 / beta_h - 1.0);
                        c *= m;
                    }
                } else {
                    c *= 1.0 + dl1 * (beta_l - 1.0) + dh1 * (beta_h - 1.0);
                }
                if (t >= eval_from) acc += pinball(z[t], c, tau);
                p_prev = p;
                d_prev = z[t] < c ? 1.0 : 0.0;
                dl2 = dl1;
                dh2 = dh1;
            }
            return acc / denom;
        }
        case ModelKind::MT: {
            const double lambda = params[0];
            const double a1 = params[1];
            const double a2 = spec.lags == 2 ? params[2] : 0.0;
            const double ltau = std::log1p(tau);
            double c = c0;
            double p1 = tau, p2 = tau;
            double d_prev = z[0] < c ? 1.0 : 0.0;
            if (eval_from == 0) acc += pinball(z[0], c, tau);
            if (spec.lags == 2) {
                for (std::size_t t = 1; t < T; ++t) {
                    p2 = p1;
                    p1 = lambda * p1 + (1.0 - lambda) * d_prev;
                    double bracket = 1.0 + a1 * (std::log1p(p1) - ltau);
                    if (t >= 2) bracket += a2 * (std::log1p(p2) - ltau);
                    if (!(bracket > 0.0)) return kInf;
                    c *= bracket;
                    if (t >= eval_from) acc += pinball(z[t], c, tau);
                    d_prev = z[t] < c ? 1.0 : 0.0;
                }
            } else {
                for (std::size_t t = 1; t < T; ++t) {
                    p1 = lambda * p1 + (1.0 - lambda) * d_prev;
                    const double bracket = 1.0 + a1 * (std::log1p(p1) - ltau);
                    if (!(bracket > 0.0)) return kInf;
                    c *= bracket;
                    if (t >= eval_from) acc += pinball(z[t], c, tau);
                    d_prev = z[t] < c ? 1.0 : 0.0;
                }
            }
            return acc / denom;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace varq
