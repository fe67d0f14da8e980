#include "svlp/particle_system.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace svlp {

double LossCurve::at_time(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
    if (it == times.begin()) throw ValidationError("loss_curve: time before grid start");
    const auto idx = static_cast<size_t>(std::distance(times.begin(), it)) - 1;
    return L[idx];
}

void InitialLaw::validate() const {
    if (x0.kind == X0::Kind::Point && !(x0.a > 0.0))
        throw ValidationError("initial.x0: point mass must be > 0");
    if (x0.kind == X0::Kind::Lognormal && !(x0.b >= 0.0))
        throw ValidationError("initial.x0: lognormal sd must be >= 0");
    if (sigma0.kind == Sigma0::Kind::Point && !(sigma0.a >= 0.0))
        throw ValidationError("initial.sigma0: point mass must be >= 0");
    if (sigma0.kind == Sigma0::Kind::Gamma && !(sigma0.a > 0.0 && sigma0.b > 0.0))
        throw ValidationError("initial.sigma0: gamma needs shape > 0 and scale > 0");
}

std::pair<double, double> InitialLaw::sample(CounterRng& rng) const {
    double x = 0.0, s = 0.0;
    switch (x0.kind) {
        case X0::Kind::Point:
            x = x0.a;
            break;
        case X0::Kind::Lognormal:
            x = std::exp(x0.a + x0.b * rng.normal());
            break;
    }
    switch (sigma0.kind) {
        case Sigma0::Kind::Point:
            s = sigma0.a;
            break;
        case Sigma0::Kind::Gamma: {
            std::gamma_distribution<double> gamma(sigma0.a, sigma0.b);
            s = gamma(rng);
            break;
        }
    }
    return {x, s};
}

double bridge_crossing_prob(double x0, double x1, double h2dt) {
    if (x0 <= 0.0 || x1 <= 0.0) return 1.0;
    if (h2dt <= 0.0) return 0.0;
    return std::exp(-2.0 * x0 * x1 / h2dt);
}

ParticleState particle_step(const ParticleState& p, const CoeffVector& c,
                            const GlobalParams& g, double t, double dt, double dW1,
                            double dB1, double dW0, double dB0, double u_bridge) {
    if (p.defaulted) throw ValidationError("particle_step: particle already defaulted");
    const double h = g.h(std::max(p.sigma, 0.0));
    const double h2 = h * h;

    ParticleState out;
    const CirState next_sigma =
        cir_step_ft({p.sigma, t}, c, dt, {dB1, dB0});
    out.sigma = next_sigma.sigma;

    const double xnew = p.X + (c.r - 0.5 * h2) * dt +
                        h * (std::sqrt(1.0 - c.rho1 * c.rho1) * dW1 + c.rho1 * dW0);
    if (xnew <= 0.0) {
        out.X = 0.0;
        out.defaulted = true;
        out.tau = t + dt;  // crossing step's right endpoint
        return out;
    }
    if (u_bridge < bridge_crossing_prob(p.X, xnew, h2 * dt)) {
        out.X = 0.0;
        out.defaulted = true;
        out.tau = t + 0.5 * dt;  // midpoint convention for in-step excursions
        return out;
    }
    out.X = xnew;
    return out;
}

namespace {

void parallel_for(int n, int workers, const std::function<void(int, int)>& body) {
    workers = std::max(1, workers);
    if (workers == 1 || n < 2 * workers) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

PortfolioResult simulate_portfolio(const PortfolioSpec& spec, const MarketPath& mp,
                                   const StepObserver& observer) {
    if (spec.N < 1) throw ValidationError("portfolio: N must be >= 1");
    spec.global.validate();
    spec.initial.validate();

    const int N = spec.N;
    std::vector<uint32_t> ids = spec.particle_ids;
    if (ids.empty()) {
        ids.resize(N);
        for (int i = 0; i < N; ++i) ids[i] = static_cast<uint32_t>(i);
    }
    if (static_cast<int>(ids.size()) != N)
        throw ValidationError("portfolio: particle_ids size must equal N");

    const uint64_t particle_root = derive_key(spec.seed, stream::particle);
    const uint64_t coeff_root = derive_key(spec.seed, stream::coeffs);
    const bool cross_idio =
        std::abs(spec.global.w1) < 1.0 || std::abs(spec.global.b1) < 1.0;
    const double w1 = spec.global.w1, b1 = spec.global.b1;
    const double wz = std::sqrt(std::max(0.0, 1.0 - w1 * w1));
    const double bz = std::sqrt(std::max(0.0, 1.0 - b1 * b1));

    std::vector<ParticleState> states(N);
    std::vector<CoeffVector> coeffs(N);
    std::vector<uint64_t> noise_keys(N), bridge_keys(N);

    parallel_for(N, spec.workers, [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            const uint64_t pkey = derive_key(particle_root, ids[i]);
            noise_keys[i] = pkey;
            bridge_keys[i] = derive_key(pkey, stream::bridge);
            CounterRng init_rng(derive_key(pkey, stream::initial));
            auto [x, s] = spec.initial.sample(init_rng);
            states[i] = ParticleState{x, s, false, std::numeric_limits<double>::infinity()};
            CounterRng coeff_rng(derive_key(coeff_root, ids[i]));
            coeffs[i] = spec.coeffs.sample(coeff_rng);
        }
    });

    const int M = mp.steps();
    PortfolioResult res;
    for (int s : spec.snapshot_steps)
        if (s == 0) res.snapshots[0] = states;

    for (int m = 0; m < M; ++m) {
        const double t = mp.times[m];
        const double dt = mp.dt(m);
        const double sdt = std::sqrt(dt);
        const double dW0 = mp.dW0[m];
        const double dB0 = mp.dB0[m];

        parallel_for(N, spec.workers, [&](int lo, int hi) {
            for (int i = lo; i < hi; ++i) {
                if (states[i].defaulted) {
                    // sigma keeps evolving after default; X stays at 0
                    auto [gW, gB] = rng_normal_pair(noise_keys[i], 2 * m);
                    double dB1 = sdt * gB;
                    if (cross_idio) {
                        auto [gZ, unused] = rng_normal_pair(noise_keys[i], 2 * m + 1);
                        (void)unused;
                        dB1 = sdt * (b1 * gB + bz * gZ);
                    }
                    states[i].sigma =
                        cir_step_ft({states[i].sigma, t}, coeffs[i], dt, {dB1, dB0}).sigma;
                    continue;
                }
                auto [gW, gB] = rng_normal_pair(noise_keys[i], 2 * m);
                double dW1 = sdt * gW;
                double dB1 = sdt * gB;
                if (cross_idio) {
                    auto [gZ, unused] = rng_normal_pair(noise_keys[i], 2 * m + 1);
                    (void)unused;
                    dW1 = sdt * (w1 * gW + wz * gZ);
                    dB1 = sdt * (b1 * gB + bz * gZ);
                }
                const double u = rng_u01(bridge_keys[i], static_cast<uint64_t>(m));
                states[i] = particle_step(states[i], coeffs[i], spec.global, t, dt, dW1,
                                          dB1, dW0, dB0, u);
            }
        });

        if (observer) observer(m, states);
        for (int s : spec.snapshot_steps)
            if (s == m + 1) res.snapshots[m + 1] = states;
    }

    res.default_times.resize(N);
    for (int i = 0; i < N; ++i) res.default_times[i] = states[i].tau;

    res.loss.times = mp.times;
    res.loss.L.resize(M + 1);
    for (int m = 0; m <= M; ++m) {
        const double t = mp.times[m];
        int count = 0;
        for (int i = 0; i < N; ++i)
            if (res.default_times[i] <= t) ++count;
        res.loss.L[m] = static_cast<double>(count) / N;
    }
    return res;
}

EmpiricalMeasure empirical_measure_at(const PortfolioResult& res, const MarketPath& mp,
                                      double t) {
    int idx = -1;
    for (int m = 0; m < static_cast<int>(mp.times.size()); ++m)
        if (std::abs(mp.times[m] - t) <= 1e-12 * std::max(1.0, mp.horizon())) idx = m;
    if (idx < 0)
        throw ValidationError("empirical_measure_at: t is not a grid time (no interpolation)");
    auto it = res.snapshots.find(idx);
    if (it == res.snapshots.end())
        throw ValidationError("empirical_measure_at: no snapshot stored at requested time");

    const auto& states = it->second;
    EmpiricalMeasure m;
    m.weight = 1.0 / static_cast<double>(states.size());
    int defaults = 0;
    for (const auto& s : states) {
        if (s.tau <= t)
            ++defaults;
        else
            m.survivors.emplace_back(s.X, s.sigma);
    }
    m.defaulted_mass = static_cast<double>(defaults) / static_cast<double>(states.size());
    return m;
}

void Grid2D::validate() const {
    if (I < 16 || J < 16) throw ValidationError("grid: I and J must be >= 16");
    if (!(xmax > 0.0) || !(ymax > 0.0)) throw ValidationError("grid: xmax, ymax must be > 0");
}

double Histogram2D::integral() const {
    double s = 0.0;
    for (double v : density) s += v;
    return s * grid.dx() * grid.dy();
}

Histogram2D histogram2d(const EmpiricalMeasure& m, const Grid2D& grid) {
    grid.validate();
    Histogram2D h;
    h.grid = grid;
    h.density.assign(static_cast<size_t>(grid.I) * grid.J, 0.0);
    h.defaulted_mass = m.defaulted_mass;
    const double cell = grid.dx() * grid.dy();
    for (const auto& [x, y] : m.survivors) {
        const int i = static_cast<int>(std::floor(x / grid.dx()));
        const int j = static_cast<int>(std::floor(y / grid.dy()));
        if (i < 0 || i >= grid.I || j < 0 || j >= grid.J) {
            h.spill += m.weight;
            continue;
        }
        h.at(i, j) += m.weight / cell;
    }
    return h;
}

}  // namespace svlp
