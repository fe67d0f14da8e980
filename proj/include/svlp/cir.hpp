#pragma once

#include <cstdint>
#include <vector>

#include "svlp/core_model.hpp"
#include "svlp/rng.hpp"

namespace svlp {

struct CirState {
    double sigma = 0.0;  // variance, kept >= 0 by all schemes
    double t = 0.0;
};

struct NoisePair {
    double dB1 = 0.0;  // idiosyncratic Gaussian increment, N(0, dt)
    double dB0 = 0.0;  // systemic Gaussian increment, N(0, dt)
};

// Full-truncation Euler step:
//   s+ = max(sigma, 0)
//   sigma' = sigma + k(theta - s+)dt + xi*sqrt(s+)*(sqrt(1-rho2^2) dB1 + rho2 dB0)
// returns max(sigma', 0). Positivity holds for any input noise.
CirState cir_step_ft(const CirState& state, const CoeffVector& c, double dt,
                     const NoisePair& noise);

// theta + (sigma0 - theta) e^{-k t}
double cir_mean(const CoeffVector& c, double sigma0, double t);

// sigma0 (xi^2/k)(e^{-kt} - e^{-2kt}) + (theta xi^2 / 2k)(1 - e^{-kt})^2
double cir_variance(const CoeffVector& c, double sigma0, double t);

// Exact transition density of sigma_t given sigma_0: a scaled noncentral
// chi-square with d = 4 k theta / xi^2 degrees of freedom, noncentrality
// lambda = sigma0 * 4k e^{-kt} / (xi^2 (1 - e^{-kt})) and scale
// xi^2 (1 - e^{-kt}) / (4k). Evaluated through the Poisson mixture of
// central chi-square densities, summed in log space around the peak term.
double cir_density(const CoeffVector& c, double sigma0, double t, double y);

// One exact draw from the transition law. Uses the d > 1 decomposition
// (squared shifted normal plus a chi-square with d-1 dof); refuses d <= 1,
// which cannot occur under Feller-satisfying parameters.
double cir_exact_sample(const CoeffVector& c, double sigma0, double t, CounterRng& rng);

struct SupDensityReport {
    double sup = 0.0;        // max over the (t, y) grid of y^alpha p_t(y)
    double argmax_t = 0.0;
    double argmax_y = 0.0;
    double refined_sup = 0.0;  // same quantity on a 2x finer grid
    double rel_change = 0.0;   // |refined - base| / base
    bool stable = false;       // rel_change < 1%
};

// Numerical check of the weighted sup bound on p_t(y) for rho2 = 0 (where
// the conditional density given B0 reduces to the unconditional one).
// Refuses parameters that fail the strong Feller condition, and rho2 != 0.
SupDensityReport verify_sup_density_bound(const CoeffVector& c, double sigma0, double T,
                                          double alpha, int nt = 32, int ny = 256,
                                          double t_min_frac = 1e-3);

struct SupMomentEstimate {
    double value = 0.0;    // estimate at n_paths
    double stderr_ = 0.0;
    double value2 = 0.0;   // estimate at 2*n_paths
    double stderr2 = 0.0;
    bool stable = false;   // |value - value2| <= 3 * pooled stderr
};

// Monte Carlo estimate of E[sup_{t<=T} sigma_t^p] over exact-transition
// paths sampled on a dt-grid, with the doubled-sample stability check.
SupMomentEstimate estimate_sup_moment(const CoeffVector& c, double sigma0, double T,
                                      double p, int n_paths, double dt, uint64_t seed);

}  // namespace svlp
