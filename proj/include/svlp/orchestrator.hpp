#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "svlp/config.hpp"
#include "svlp/market_path.hpp"
#include "svlp/particle_system.hpp"
#include "svlp/spde2d.hpp"

namespace svlp {

inline constexpr const char* kVersion = "0.1.0";

// piecewise linear tranche payoff: clamp((L - a) / (d - a), 0, 1)
double tranche_payoff(double L, const TrancheConfig& tr);

struct LimitLossResult {
    LossCurve mean;
    std::vector<LossCurve> per_sample;
    std::vector<CoeffVector> samples;
};

// Eq.-style pipeline for one market path: draw n coefficient vectors, solve
// the 2D SPDE for each on the shared path, average the losses pointwise.
// A sub-solve failure aborts with the sample index and seed in the message.
LimitLossResult estimate_limit_loss(const RunConfig& cfg, const MarketPath& mp);

PortfolioSpec portfolio_spec_from_config(const RunConfig& cfg);

struct CompareReport {
    LossCurve particle_loss;
    LossCurve spde_loss;
    double linf_gap = 0.0;
    double l2_gap = 0.0;
    double terminal_gap = 0.0;
    std::vector<std::pair<int, double>> ladder;  // (N, |L_N(T) - L_spde(T)|)
    double density_l1 = 0.0;                     // coarsened 2D density gap at T
    nlohmann::json to_json() const;
};

// Runs both pipelines on the identical MarketPath and reports loss-curve and
// density gaps plus the N-ladder table.
CompareReport compare_particle_vs_spde(const RunConfig& cfg);

struct TranchePriceResult {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stderr_;
    int n_paths = 0;
};

// Monte Carlo over independent market paths of tranche_payoff(L(t)), inner
// loss from estimate_limit_loss.
TranchePriceResult price_tranche(const RunConfig& cfg);

// Run directory layout: <output.dir>/<config-hash>/...
std::string prepare_run_dir(const RunConfig& cfg);
void write_manifest(const std::string& dir, const RunConfig& cfg);
void write_loss_csv(const std::string& path, const LossCurve& lc);
void write_market_path_csv(const std::string& path, const MarketPath& mp);

}  // namespace svlp
