#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "svlp/cir.hpp"
#include "svlp/core_model.hpp"
#include "svlp/market_path.hpp"

namespace svlp {

// Per-asset state: log-distance-to-default X and variance sigma.
// defaulted <=> tau set <=> X frozen at 0 thereafter.
struct ParticleState {
    double X = 0.0;
    double sigma = 0.0;
    bool defaulted = false;
    double tau = std::numeric_limits<double>::infinity();
};

struct LossCurve {
    std::vector<double> times;
    std::vector<double> L;  // in [0,1], nondecreasing

    double at_time(double t) const;  // value at the largest grid time <= t
    double terminal() const { return L.back(); }
};

// Survivor atoms with weight 1/N plus the defaulted mass; the two always
// add to 1 exactly.
struct EmpiricalMeasure {
    std::vector<std::pair<double, double>> survivors;  // (X, sigma)
    double weight = 0.0;                               // 1/N
    double defaulted_mass = 0.0;
};

struct InitialLaw {
    struct X0 {
        enum class Kind { Point, Lognormal } kind = Kind::Point;
        double a = 0.5;  // point value / log-mean
        double b = 0.0;  // log-sd
    } x0;
    struct Sigma0 {
        enum class Kind { Point, Gamma } kind = Kind::Point;
        double a = 1.0;  // point value / shape
        double b = 0.0;  // scale
    } sigma0;

    void validate() const;
    std::pair<double, double> sample(CounterRng& rng) const;  // (X0, sigma0)
};

// Probability that a Brownian bridge pinned at x0, x1 > 0 over a step with
// squared volatility h2dt = h^2(sigma) * dt dips below zero:
//   exp(-2 x0 x1 / h2dt)
double bridge_crossing_prob(double x0, double x1, double h2dt);

// One Euler step of the distance-to-default / variance pair, with the
// Brownian-bridge absorption test. The volatility h(sigma) is frozen at the
// step start. tau convention: right endpoint when X' <= 0, midpoint when the
// bridge fires. u_bridge is the uniform variate consumed by the bridge test.
ParticleState particle_step(const ParticleState& p, const CoeffVector& c,
                            const GlobalParams& g, double t, double dt, double dW1,
                            double dB1, double dW0, double dB0, double u_bridge);

struct PortfolioSpec {
    int N = 1000;
    CoeffDistribution coeffs;   // point mass for the fixed-coefficient system
    InitialLaw initial;
    GlobalParams global;
    uint64_t seed = 1;          // master seed; particle streams derive from it
    // Identity of each particle; defaults to 0..N-1. Permuting these (and
    // hence the RNG streams and coefficient draws with them) must leave all
    // ensemble outputs unchanged.
    std::vector<uint32_t> particle_ids;
    int workers = 1;
    std::vector<int> snapshot_steps;  // grid indices at which (X, sigma) are stored
};

// Optional per-step observer: called once per step m (after advancing all
// particles) with the post-step states. Used by weak-form diagnostics.
using StepObserver = std::function<void(int m, const std::vector<ParticleState>&)>;

struct PortfolioResult {
    LossCurve loss;
    std::vector<double> default_times;              // +inf for survivors
    std::map<int, std::vector<ParticleState>> snapshots;  // by grid step index
};

// Advances all particles on the MarketPath grid with shared systemic
// increments and independent idiosyncratic increments. When w1 or b1 < 1,
// the idiosyncratic pair is built from three independent streams per
// particle: W = w1*Wt + sqrt(1-w1^2)*Z, B = b1*Bt + sqrt(1-b1^2)*Z.
PortfolioResult simulate_portfolio(const PortfolioSpec& spec, const MarketPath& mp,
                                   const StepObserver& observer = {});

EmpiricalMeasure empirical_measure_at(const PortfolioResult& res, const MarketPath& mp,
                                      double t);

struct Grid2D {
    int I = 64;          // cells in x
    int J = 64;          // cells in y
    double xmax = 1.0;
    double ymax = 1.0;

    double dx() const { return xmax / I; }
    double dy() const { return ymax / J; }
    void validate() const;
};

// Cell-averaged density of the survivor cloud; mass outside the grid is
// reported as spill. integral + defaulted_mass + spill = 1 exactly.
struct Histogram2D {
    Grid2D grid;
    std::vector<double> density;  // I*J, row-major in x
    double spill = 0.0;
    double defaulted_mass = 0.0;

    double& at(int i, int j) { return density[static_cast<size_t>(i) * grid.J + j]; }
    double at(int i, int j) const { return density[static_cast<size_t>(i) * grid.J + j]; }
    double integral() const;
};

Histogram2D histogram2d(const EmpiricalMeasure& m, const Grid2D& grid);

}  // namespace svlp
