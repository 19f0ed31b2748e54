#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace varq {

// Three-valued Chebyshev-equality DGP with a sinusoidal true quantile path.
// The cycle length S/f defaults to 5000 observations.
struct SimConfig {
    double tau = 0.05;
    std::size_t S = 100000;
    double f = 20.0;  // cycles over the whole sample
    std::uint64_t seed = 0;

    void validate() const {
        if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("tau must be in (0, 1/2)");
        if (S == 0 || !(f > 0.0)) throw std::invalid_argument("S and f must be positive");
        if (static_cast<double>(S) < static_cast<double>(S) / f)
            throw std::invalid_argument("sample shorter than one cycle");
    }
};

struct SimPath {
    std::vector<double> z;       // draws, E z = 0 and V z = 1 at every step
    std::vector<double> c_true;  // true tau-quantile path
    std::vector<double> p;       // per-step tail probability, p = c^-2 / 2
    // Violations of the true quantile path. The lower atom of the three-point
    // law coincides with c_true, so the strict sample comparison z < c_true
    // never fires; the coverage-tau portion of the atom's mass is resolved by
    // the latent uniform at generation time (u < tau), which makes these
    // indicators i.i.d. Bernoulli(tau) as the benchmark analysis assumes.
    std::vector<std::uint8_t> d_true;
};

// c_s = -[(2 tau)^{-1/2} + 1]/2 + [(2 tau)^{-1/2} - 1]/2 * sin(2 pi f s / S),
// s = 1..S.
std::vector<double> sine_quantile_path(const SimConfig& config);

// z_s in {-(2 p_s)^{-1/2}, 0, +(2 p_s)^{-1/2}} w.p. {p_s, 1-2 p_s, p_s}; the
// lower atom equals c_true[s] so Chebyshev holds with equality.
SimPath simulate(const SimConfig& config);

struct MixtureEval {
    double expected_actual_quantile = 0.0;  // E_{t-1}[q_t(tau)]
    double conditional_quantile = 0.0;      // c_t(tau)
    double bias = 0.0;                      // b_t = E[q] - c
};

// Mixture of a standardized exponential and its mirror image with a random
// weight driven by the conditioning value x in {0,1}. Closed forms in the
// pure left tail (x=1, tau < 0.009), numeric inversion otherwise.
MixtureEval mixture_eval(double tau, int x);

// tau-quantile of the mixture CDF with fixed weight w on the right-side
// (z >= -1) component.
double mixture_quantile(double tau, double w);

// Unconditional variant: equal weights on the two components.
double mixture_unconditional_quantile(double tau);

struct GpdMaxQuantile {
    double alpha_star = 0.0;
    double q_star = 0.0;
};

// Tail index alpha* = 2 ln(2 tau) / (1 + ln(2 tau)) maximizing the
// Generalized Pareto tau-quantile under unit variance, and the corresponding
// maximal quantile q*. Requires alpha* > 2 (finite variance).
GpdMaxQuantile gpd_max_quantile(double tau);

}  // namespace varq
