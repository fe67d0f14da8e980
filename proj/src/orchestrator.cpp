#include "svlp/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <thread>

#include "svlp/csv.hpp"

namespace svlp {

using nlohmann::json;

void write_series_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    CsvWriter w(path);
    w.row(header);
    if (columns.empty()) return;
    const size_t rows = columns[0].size();
    std::vector<double> cells(columns.size());
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < columns.size(); ++c) cells[c] = columns[c][r];
        w.numeric_row(cells);
    }
}

double tranche_payoff(double L, const TrancheConfig& tr) {
    if (!(L >= 0.0 && L <= 1.0)) throw ValidationError("tranche_payoff: L must be in [0,1]");
    const double ramp = (L - tr.attachment) / (tr.detachment - tr.attachment);
    return std::clamp(ramp, 0.0, 1.0);
}

namespace {

// bounded task pool with deterministic placement by task index
void run_tasks(int n_tasks, int workers, const std::function<void(int)>& task) {
    workers = std::max(1, std::min(workers, n_tasks));
    if (workers == 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) task(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

DensityField initial_field(const RunConfig& cfg) {
    return initial_field_from_laws(cfg.grid, cfg.initial);
}

}  // namespace

PortfolioSpec portfolio_spec_from_config(const RunConfig& cfg) {
    PortfolioSpec spec;
    spec.N = cfg.N;
    spec.coeffs = cfg.coeffs;
    spec.initial = cfg.initial;
    spec.global = cfg.global;
    spec.seed = cfg.master_seed;
    spec.workers = cfg.workers;
    return spec;
}

LimitLossResult estimate_limit_loss(const RunConfig& cfg, const MarketPath& mp) {
    const int n = cfg.n_coeff_samples;
    LimitLossResult out;
    out.samples.resize(n);
    out.per_sample.resize(n);

    for (int i = 0; i < n; ++i) {
        CounterRng rng(derive_key(cfg.coeff_key(), static_cast<uint64_t>(i)));
        out.samples[i] = cfg.coeffs.sample(rng);
    }

    const DensityField u0 = initial_field(cfg);
    Scheme2D scheme;
    scheme.cfl_c = cfg.scheme.cfl_2d;

    run_tasks(n, cfg.workers, [&](int i) {
        try {
            const double rho = compute_rho(out.samples[i], cfg.global);
            Series2D series = solve_spde2d(out.samples[i], cfg.global, rho, u0, mp, scheme);
            out.per_sample[i] = series.loss;
        } catch (const std::exception& e) {
            char buf[256];
            std::snprintf(buf, sizeof(buf),
                          "limit_loss: sample %d failed (coeff seed %llu): %s", i,
                          static_cast<unsigned long long>(cfg.coeff_key()), e.what());
            throw SolverError(buf);
        }
    });

    out.mean.times = mp.times;
    out.mean.L.assign(mp.times.size(), 0.0);
    for (int i = 0; i < n; ++i)
        for (size_t m = 0; m < out.mean.L.size(); ++m) out.mean.L[m] += out.per_sample[i].L[m];
    for (double& v : out.mean.L) v /= n;
    return out;
}

namespace {

// L1 distance between the particle cloud and the field, block-averaged to a
// coarse grid so that per-cell Monte Carlo noise does not dominate
double density_l1_gap(const PortfolioResult& particles, const MarketPath& mp,
                      const DensityField& field) {
    const Grid2D& g = field.grid;
    const int fx = std::max(1, g.I / 32);
    const int fy = std::max(1, g.J / 16);
    const int CI = g.I / fx, CJ = g.J / fy;
    Grid2D coarse{CI, CJ, g.xmax, g.ymax};

    EmpiricalMeasure em = empirical_measure_at(particles, mp, mp.horizon());
    Histogram2D hist = histogram2d(em, coarse);

    // block masses of the field (x nodes carry weight dx, ends are zero)
    std::vector<double> fmass(static_cast<size_t>(CI) * CJ, 0.0);
    for (int i = 1; i < g.I; ++i) {
        const int bi = std::min(i / fx, CI - 1);
        for (int j = 0; j < g.J; ++j) {
            const int bj = std::min(j / fy, CJ - 1);
            fmass[static_cast<size_t>(bi) * CJ + bj] += field.at(i, j) * g.dx() * g.dy();
        }
    }
    double l1 = 0.0;
    const double cell = coarse.dx() * coarse.dy();
    for (int bi = 0; bi < CI; ++bi)
        for (int bj = 0; bj < CJ; ++bj) {
            const double pd = hist.at(bi, bj);
            const double fd = fmass[static_cast<size_t>(bi) * CJ + bj] / cell;
            l1 += std::abs(pd - fd) * cell;
        }
    return l1;
}

}  // namespace

json CompareReport::to_json() const {
    json j;
    j["linf_gap"] = linf_gap;
    j["l2_gap"] = l2_gap;
    j["terminal_gap"] = terminal_gap;
    j["density_l1"] = density_l1;
    json lad = json::array();
    for (const auto& [n, gap] : ladder) lad.push_back({{"N", n}, {"gap", gap}});
    j["ladder"] = lad;
    return j;
}

CompareReport compare_particle_vs_spde(const RunConfig& cfg) {
    if (cfg.mode != RunMode::Both)
        throw ValidationError("compare: mode must be 'both'");
    const MarketPath mp = gen_market_path(cfg.global, cfg.steps, cfg.market_key());

    CompareReport rep;

    // SPDE side
    LimitLossResult limit = estimate_limit_loss(cfg, mp);
    rep.spde_loss = limit.mean;

    // particle side at the full N, with snapshots for the density gap
    PortfolioSpec spec = portfolio_spec_from_config(cfg);
    spec.snapshot_steps = {0, mp.steps()};
    PortfolioResult particles = simulate_portfolio(spec, mp);
    rep.particle_loss = particles.loss;

    double linf = 0.0, l2 = 0.0;
    for (size_t m = 0; m < rep.spde_loss.L.size(); ++m) {
        const double d = std::abs(rep.spde_loss.L[m] - rep.particle_loss.L[m]);
        linf = std::max(linf, d);
        l2 += d * d * (m + 1 < rep.spde_loss.L.size()
                           ? mp.times[m + 1] - mp.times[m]
                           : 0.0);
    }
    rep.linf_gap = linf;
    rep.l2_gap = std::sqrt(l2);
    rep.terminal_gap = std::abs(rep.spde_loss.terminal() - rep.particle_loss.terminal());

    const double Lspde_T = rep.spde_loss.terminal();
    for (int n : cfg.ladder) {
        PortfolioSpec s = spec;
        s.N = n;
        s.snapshot_steps.clear();
        PortfolioResult r = simulate_portfolio(s, mp);
        rep.ladder.emplace_back(n, std::abs(r.loss.terminal() - Lspde_T));
    }
    rep.ladder.emplace_back(cfg.N, rep.terminal_gap);

    // density gap at T against the final field of the first coefficient sample
    const DensityField u0 = initial_field(cfg);
    Scheme2D scheme;
    scheme.cfl_c = cfg.scheme.cfl_2d;
    const double rho = compute_rho(limit.samples[0], cfg.global);
    Series2D series = solve_spde2d(limit.samples[0], cfg.global, rho, u0, mp, scheme);
    rep.density_l1 = density_l1_gap(particles, mp, series.snapshots.back());
    return rep;
}

TranchePriceResult price_tranche(const RunConfig& cfg) {
    const int K = cfg.tranche.n_market_paths;
    if (K < 2) throw ValidationError("tranche.n_market_paths: must be >= 2");

    TranchePriceResult out;
    out.n_paths = K;
    std::vector<std::vector<double>> payoff(K);

    run_tasks(K, cfg.workers, [&](int k) {
        const uint64_t key = derive_key(cfg.market_key(), static_cast<uint64_t>(k));
        const MarketPath mp = gen_market_path(cfg.global, cfg.steps, key);
        RunConfig sub = cfg;
        sub.coeff_seed = derive_key(cfg.coeff_key(), static_cast<uint64_t>(k));
        const LimitLossResult res = estimate_limit_loss(sub, mp);
        payoff[k].resize(res.mean.L.size());
        for (size_t m = 0; m < res.mean.L.size(); ++m)
            payoff[k][m] = tranche_payoff(res.mean.L[m], cfg.tranche);
        if (out.times.empty()) out.times = mp.times;
    });

    const size_t M = payoff[0].size();
    out.mean.assign(M, 0.0);
    out.stderr_.assign(M, 0.0);
    for (int k = 0; k < K; ++k)
        for (size_t m = 0; m < M; ++m) out.mean[m] += payoff[k][m];
    for (double& v : out.mean) v /= K;
    for (int k = 0; k < K; ++k)
        for (size_t m = 0; m < M; ++m) {
            const double d = payoff[k][m] - out.mean[m];
            out.stderr_[m] += d * d;
        }
    for (double& v : out.stderr_) v = std::sqrt(v / (K * std::max(1, K - 1)));
    return out;
}

std::string prepare_run_dir(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    const std::string dir = cfg.output.dir + "/" + config_hash(cfg);
    fs::create_directories(dir);
    std::ofstream(dir + "/config.json") << config_to_json(cfg).dump(2) << "\n";
    write_manifest(dir, cfg);
    return dir;
}

void write_manifest(const std::string& dir, const RunConfig& cfg) {
    json m;
    m["config_hash"] = config_hash(cfg);
    m["version"] = kVersion;
    m["seeds"] = {{"master", cfg.master_seed},
                  {"market", cfg.market_key()},
                  {"coeffs", cfg.coeff_key()}};
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    m["created_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    std::ofstream(dir + "/manifest.json") << m.dump(2) << "\n";
}

void write_loss_csv(const std::string& path, const LossCurve& lc) {
    write_series_csv(path, {"t", "L"}, {lc.times, lc.L});
}

void write_market_path_csv(const std::string& path, const MarketPath& mp) {
    std::vector<double> t(mp.times.begin(), mp.times.end() - 1);
    write_series_csv(path, {"t", "dW0", "dB0"}, {t, mp.dW0, mp.dB0});
}

}  // namespace svlp
