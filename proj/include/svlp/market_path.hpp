#pragma once

#include <cstdint>
#include <vector>

#include "svlp/core_model.hpp"

namespace svlp {

// Discretized systemic Brownian pair (W0, B0) with correlation rho3.
// This is the shared randomness of every component: particles and SPDE
// solvers driven by the same MarketPath see bit-identical increments.
struct MarketPath {
    std::vector<double> times;  // 0 = t_0 < ... < t_M = T
    std::vector<double> dW0;    // increments over [t_m, t_{m+1}]
    std::vector<double> dB0;

    int steps() const { return static_cast<int>(dW0.size()); }
    double dt(int m) const { return times[m + 1] - times[m]; }
    double horizon() const { return times.back(); }
};

// dB0 = rho3 * dW0 + sqrt(1 - rho3^2) * dZ with dZ independent, which gives
// the exact cross-correlation; rho3 = 1 makes the increments identical.
MarketPath gen_market_path(const GlobalParams& g, int steps, uint64_t market_key);

}  // namespace svlp
