// Command-line front end: config ingestion, subcommands, progress logging.
// Progress goes to stderr; data goes to files under the run directory only.
//
// Exit codes: 0 success, 1 validation error (message names the offending
// key), 2 solver failure (message includes the reproduction seed).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "svlp/cir.hpp"
#include "svlp/config.hpp"
#include "svlp/csv.hpp"
#include "svlp/orchestrator.hpp"
#include "svlp/smoothing.hpp"
#include "svlp/spde1d.hpp"
#include "svlp/spde2d.hpp"

using namespace svlp;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    int workers = 0;
    long long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file")->required();
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set grid.cells_x=128");
    cmd->add_option("--out", args.out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--workers", args.workers, "worker threads");
    cmd->add_option("--seed", args.seed, "master seed (overrides seeds.master)");
}

RunConfig load(const CommonArgs& args) {
    std::ifstream is(args.config_path);
    if (!is) throw ValidationError("config: cannot open " + args.config_path);
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: JSON parse error: ") + e.what());
    }
    for (const auto& kv : args.overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw ValidationError("--set: expected KEY=VALUE, got " + kv);
        apply_override(doc, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.workers > 0) doc["workers"] = args.workers;
    if (args.seed >= 0) doc["seeds"]["master"] = static_cast<uint64_t>(args.seed);
    if (!args.out_dir.empty()) doc["output"]["dir"] = args.out_dir;
    return parse_config(doc);
}

int cmd_validate(const CommonArgs& args) {
    const RunConfig cfg = load(args);
    CounterRng probe(0);
    if (cfg.coeffs.is_point_mass()) {
        const CoeffVector c = cfg.coeffs.sample(probe);
        c.validate(cfg.strict);
        const char* cls = nullptr;
        switch (feller_check(c)) {
            case FellerClass::StrongFeller: cls = "StrongFeller"; break;
            case FellerClass::FellerOnly: cls = "FellerOnly"; break;
            case FellerClass::Violated: cls = "Violated"; break;
        }
        const double rho = compute_rho(c, cfg.global);
        std::printf("feller_check: %s\n", cls);
        std::printf("compute_rho: %.12g\n", rho);
        std::printf("rho_admissible: %s\n",
                    rho_admissible(c, cfg.global, rho) ? "true" : "false");
        if (!cfg.strict && feller_check(c) != FellerClass::StrongFeller)
            std::fprintf(stderr,
                         "warning: permissive mode, strong condition k*theta > (3/4)*xi^2 "
                         "not satisfied\n");
    } else {
        CounterRng rng(cfg.coeff_key());
        for (int i = 0; i < 100; ++i) cfg.coeffs.sample(rng).validate(cfg.strict);
        std::printf("coeff distribution: 100 probe draws valid\n");
    }
    std::printf("config_hash: %s\n", config_hash(cfg).c_str());
    return 0;
}

int cmd_simulate_particles(const CommonArgs& args) {
    const RunConfig cfg = load(args);
    const std::string dir = prepare_run_dir(cfg);
    const MarketPath mp = gen_market_path(cfg.global, cfg.steps, cfg.market_key());
    if (cfg.output.market_path) write_market_path_csv(dir + "/market_path_0.csv", mp);

    PortfolioSpec spec = portfolio_spec_from_config(cfg);
    std::fprintf(stderr, "simulating %d particles over %d steps...\n", spec.N, mp.steps());
    PortfolioResult res = simulate_portfolio(spec, mp);
    write_loss_csv(dir + "/loss_particles.csv", res.loss);

    if (cfg.output.trajectories) {
        CsvWriter w(dir + "/default_times.csv");
        w.row({"particle", "tau"});
        for (size_t i = 0; i < res.default_times.size(); ++i)
            w.row({std::to_string(i), fmt_g17(res.default_times[i])});
    }
    std::fprintf(stderr, "run directory: %s\n", dir.c_str());
    return 0;
}

int cmd_solve_spde1d(const CommonArgs& args) {
    const RunConfig cfg = load(args);
    if (!cfg.coeffs.is_point_mass())
        throw ValidationError("solve-spde1d: needs point-mass coefficients");
    const std::string dir = prepare_run_dir(cfg);
    CounterRng probe(0);
    const CoeffVector c = cfg.coeffs.sample(probe);
    const MarketPath mp = gen_market_path(cfg.global, cfg.steps, cfg.market_key());

    // constant-volatility reduction: variance path h(theta)^2
    const double h = cfg.global.h(c.theta);
    const VolPath vol = VolPath::constant(h * h);
    const auto ux = x_density_from_law(cfg.initial.x0, cfg.grid.xmax, cfg.grid.I);
    Density1D u0{cfg.grid.xmax, ux};
    Scheme1D sc;
    sc.cfl_c = cfg.scheme.cfl_1d;
    sc.store_every = std::max(1, cfg.steps / 16);
    Series1D series = solve_1d(u0, vol, c.r, c.rho1, mp, sc);

    write_loss_csv(dir + "/loss_1d.csv", loss_1d(series));
    const auto residual = energy_identity_residual(series, c.rho1);
    write_series_csv(dir + "/energy_residual.csv", {"t", "residual"},
                     {series.times, residual});
    const Density1D& fin = series.snapshots.back();
    std::vector<double> xs(fin.u.size());
    for (size_t i = 0; i < xs.size(); ++i) xs[i] = i * fin.dx();
    write_series_csv(dir + "/density_final.csv", {"x", "u"}, {xs, fin.u});
    std::fprintf(stderr, "run directory: %s\n", dir.c_str());
    return 0;
}

int cmd_solve_spde2d(const CommonArgs& args) {
    const RunConfig cfg = load(args);
    const std::string dir = prepare_run_dir(cfg);
    const MarketPath mp = gen_market_path(cfg.global, cfg.steps, cfg.market_key());
    if (cfg.output.market_path) write_market_path_csv(dir + "/market_path_0.csv", mp);

    std::fprintf(stderr, "solving %d SPDE sample(s) on a %dx%d grid...\n",
                 cfg.n_coeff_samples, cfg.grid.I, cfg.grid.J);
    LimitLossResult res = estimate_limit_loss(cfg, mp);
    for (int i = 0; i < cfg.n_coeff_samples; ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "/loss_0_%d.csv", i);
        write_loss_csv(dir + name, res.per_sample[i]);
    }
    write_loss_csv(dir + "/loss_mean.csv", res.mean);

    if (!cfg.output.field_times.empty()) {
        // re-solve the first sample storing fields at the requested times
        Scheme2D scheme;
        scheme.cfl_c = cfg.scheme.cfl_2d;
        scheme.store_every = 1;
        const DensityField u0 = initial_field_from_laws(cfg.grid, cfg.initial);
        const double rho = compute_rho(res.samples[0], cfg.global);
        Series2D series = solve_spde2d(res.samples[0], cfg.global, rho, u0, mp, scheme);
        for (double t : cfg.output.field_times) {
            const int m = static_cast<int>(std::llround(t / mp.dt(0)));
            if (m < 0 || m > mp.steps()) continue;
            char name[64];
            std::snprintf(name, sizeof(name), "/field_%04d.bin", m);
            write_field_bin(dir + name, series.snapshot_at_step(m));
        }
    }
    std::fprintf(stderr, "run directory: %s\n", dir.c_str());
    return 0;
}

int cmd_compare(const CommonArgs& args, const std::string& ladder_csv) {
    RunConfig cfg = load(args);
    if (!ladder_csv.empty()) {
        cfg.ladder.clear();
        size_t pos = 0;
        while (pos < ladder_csv.size()) {
            const size_t comma = ladder_csv.find(',', pos);
            cfg.ladder.push_back(std::stoi(ladder_csv.substr(pos, comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    const std::string dir = prepare_run_dir(cfg);
    std::fprintf(stderr, "comparing particles (N=%d) vs SPDE (%dx%d)...\n", cfg.N,
                 cfg.grid.I, cfg.grid.J);
    CompareReport rep = compare_particle_vs_spde(cfg);
    write_loss_csv(dir + "/loss_particles.csv", rep.particle_loss);
    write_loss_csv(dir + "/loss_mean.csv", rep.spde_loss);
    std::ofstream(dir + "/report.json") << rep.to_json().dump(2) << "\n";
    std::fprintf(stderr, "terminal gap %.6f, Linf %.6f\n", rep.terminal_gap, rep.linf_gap);
    std::fprintf(stderr, "run directory: %s\n", dir.c_str());
    return 0;
}

int cmd_smooth_diagnostics(const CommonArgs& args) {
    const RunConfig cfg = load(args);
    if (!cfg.coeffs.is_point_mass())
        throw ValidationError("smooth-diagnostics: needs point-mass coefficients");
    const std::string dir = prepare_run_dir(cfg);
    CounterRng probe(0);
    const CoeffVector c = cfg.coeffs.sample(probe);
    const double sigma0 =
        cfg.initial.sigma0.kind == InitialLaw::Sigma0::Kind::Point ? cfg.initial.sigma0.a
                                                                   : c.theta;

    // CIR transition density at the horizon as the test function
    GridFn u;
    u.lo = 0.0;
    const double zmax = cfg.grid.ymax;
    const int nz = 4096;
    u.step = zmax / nz;
    u.v.resize(nz + 1);
    for (int i = 0; i <= nz; ++i)
        u.v[i] = cir_density(c, sigma0, cfg.T, u.point(i));

    std::vector<double> ygrid;
    const int ny = 512;
    const double ymax = std::sqrt(zmax);
    for (int i = 1; i <= ny; ++i) ygrid.push_back(ymax * i / ny);

    const std::vector<double> eps_ladder = {0.2, 0.1, 0.05, 0.025};
    const std::vector<double> deltas = {-0.5, 0.0, 1.0, 2.0};
    const auto Ju = J_limit(u, ygrid);

    json report;
    report["eps_ladder"] = eps_ladder;
    json norms = json::array();
    bool all_decreasing = true;
    for (double delta : deltas) {
        json row;
        row["delta"] = delta;
        std::vector<double> vals;
        for (double eps : eps_ladder) {
            auto J = smooth_J(u, ygrid, eps);
            std::vector<double> diff(J.J.size());
            for (size_t i = 0; i < diff.size(); ++i) diff[i] = J.J[i] - Ju[i];
            vals.push_back(weighted_l2(diff, ygrid, {delta, true}).value);
        }
        for (size_t i = 1; i < vals.size(); ++i)
            if (!(vals[i] < vals[i - 1])) all_decreasing = false;
        row["norms"] = vals;
        norms.push_back(row);
    }
    report["convergence_norms"] = norms;
    report["all_decreasing"] = all_decreasing;
    std::ofstream(dir + "/smoothing_report.json") << report.dump(2) << "\n";
    std::fprintf(stderr, "smoothing convergence %s\n", all_decreasing ? "ok" : "FAILED");
    std::fprintf(stderr, "run directory: %s\n", dir.c_str());
    return all_decreasing ? 0 : 2;
}

int cmd_price_tranche(const CommonArgs& args) {
    const RunConfig cfg = load(args);
    const std::string dir = prepare_run_dir(cfg);
    std::fprintf(stderr, "pricing tranche [%g, %g] over %d market paths...\n",
                 cfg.tranche.attachment, cfg.tranche.detachment, cfg.tranche.n_market_paths);
    TranchePriceResult res = price_tranche(cfg);
    write_series_csv(dir + "/tranche.csv", {"t", "payoff_mean", "payoff_stderr"},
                     {res.times, res.mean, res.stderr_});
    std::fprintf(stderr, "run directory: %s\n", dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heston-type large-portfolio particle system and its SPDE limit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string ladder_csv;

    CLI::App* validate = app.add_subcommand("validate", "validate a config and print checks");
    add_common(validate, args);
    CLI::App* particles =
        app.add_subcommand("simulate-particles", "simulate the finite-N particle system");
    add_common(particles, args);
    CLI::App* spde1d =
        app.add_subcommand("solve-spde1d", "solve the constant-volatility 1D reduction");
    add_common(spde1d, args);
    CLI::App* spde2d = app.add_subcommand("solve-spde2d", "solve the 2D limit SPDE");
    add_common(spde2d, args);
    CLI::App* compare =
        app.add_subcommand("compare", "particles vs SPDE on a shared systemic path");
    add_common(compare, args);
    compare->add_option("--n-ladder", ladder_csv, "comma-separated particle counts");
    CLI::App* smooth =
        app.add_subcommand("smooth-diagnostics", "kernel smoothing convergence report");
    add_common(smooth, args);
    CLI::App* tranche = app.add_subcommand("price-tranche", "tranche payoff Monte Carlo");
    add_common(tranche, args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(args);
        if (particles->parsed()) return cmd_simulate_particles(args);
        if (spde1d->parsed()) return cmd_solve_spde1d(args);
        if (spde2d->parsed()) return cmd_solve_spde2d(args);
        if (compare->parsed()) return cmd_compare(args, ladder_csv);
        if (smooth->parsed()) return cmd_smooth_diagnostics(args);
        if (tranche->parsed()) return cmd_price_tranche(args);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
