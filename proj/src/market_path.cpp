#include "svlp/market_path.hpp"

#include <cmath>

#include "svlp/rng.hpp"

namespace svlp {

MarketPath gen_market_path(const GlobalParams& g, int steps, uint64_t market_key) {
    if (steps < 1) throw ValidationError("market_path: steps must be >= 1");
    g.validate();
    const double T = g.horizon;
    const double dt = T / steps;
    const double sdt = std::sqrt(dt);
    const double c = std::sqrt(std::max(0.0, 1.0 - g.rho3 * g.rho3));

    MarketPath mp;
    mp.times.resize(steps + 1);
    mp.dW0.resize(steps);
    mp.dB0.resize(steps);
    for (int m = 0; m <= steps; ++m) mp.times[m] = T * m / steps;
    for (int m = 0; m < steps; ++m) {
        auto [g1, g2] = rng_normal_pair(market_key, static_cast<uint64_t>(m));
        mp.dW0[m] = sdt * g1;
        mp.dB0[m] = g.rho3 * mp.dW0[m] + c * sdt * g2;
    }
    return mp;
}

}  // namespace svlp
