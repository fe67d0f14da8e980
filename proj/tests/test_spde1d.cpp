#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "svlp/particle_system.hpp"
#include "svlp/smoothing.hpp"
#include "svlp/spde1d.hpp"

using namespace svlp;

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double norm_pdf(double x, double var) {
    return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * M_PI * var);
}

Density1D gaussian_bump(double xmax, int cells, double mean, double sd) {
    return density1d_from_cdf(xmax, cells,
                              [=](double x) { return norm_cdf((x - mean) / sd); });
}

MarketPath flat_path(double T, int steps, uint64_t key, double rho3 = 0.0) {
    GlobalParams g;
    g.horizon = T;
    g.rho3 = rho3;
    return gen_market_path(g, steps, key);
}

double barrier_prob(double x0, double r, double s, double T) {
    const double mu = r - 0.5 * s * s;
    return norm_cdf((-x0 - mu * T) / (s * std::sqrt(T))) +
           std::exp(-2.0 * mu * x0 / (s * s)) * norm_cdf((-x0 + mu * T) / (s * std::sqrt(T)));
}

}  // namespace

TEST_CASE("zero initial data stays zero") {
    Density1D u0{4.0, std::vector<double>(257, 0.0)};
    MarketPath mp = flat_path(0.5, 100, 3);
    Series1D s = solve_1d(u0, VolPath::constant(0.09), 0.03, 0.5, mp);
    for (double v : s.snapshots.back().u) CHECK(v == 0.0);
    LossCurve lc = loss_1d(s);
    CHECK(lc.terminal() == doctest::Approx(1.0));
}

TEST_CASE("CFL refusal names the required step") {
    Density1D u0 = gaussian_bump(4.0, 64, 2.0, 0.4);
    MarketPath mp = flat_path(1.0, 100, 3);  // dt = 0.01 way above 0.5*dx^2/sigma
    CHECK_THROWS_WITH_AS(solve_1d(u0, VolPath::constant(1.0), 0.0, 0.0, mp),
                         doctest::Contains("CFL violation"), ValidationError);
}

TEST_CASE("zero-drift diffusion matches the method-of-images solution") {
    const double s2 = 0.09;              // sigma = s^2, constant
    const double r = 0.5 * s2;           // kills the drift r - sigma/2
    const double xmax = 8.0, T = 1.0;
    const int I = 512, M = 1000;
    const double mean = 2.0, sd = 0.3;

    Density1D u0 = gaussian_bump(xmax, I, mean, sd);
    MarketPath mp = flat_path(T, M, 11);
    Series1D series = solve_1d(u0, VolPath::constant(s2), r, 0.0, mp);
    const Density1D& uT = series.snapshots.back();

    // images formula: u(T,x) = int u0(q) [phi(x-q; s2 T) - phi(x+q; s2 T)] dq
    auto oracle = [&](double x) {
        const int n = 4000;
        const double lo = std::max(0.0, mean - 8 * sd), hi = mean + 8 * sd;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double q = lo + (hi - lo) * i / n;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            const double u0q = norm_pdf(q - mean, sd * sd);
            acc += w * u0q * (norm_pdf(x - q, s2 * T) - norm_pdf(x + q, s2 * T));
        }
        return acc * (hi - lo) / n;
    };

    double max_err = 0.0;
    for (int i = 0; i <= I; i += 4)
        max_err = std::max(max_err, std::abs(uT.u[i] - oracle(i * uT.dx())));
    CHECK(max_err < 1e-3);
}

TEST_CASE("pure transport at rho1 = +-1 preserves the discrete L2 norm") {
    const double s2 = 0.04;
    const double xmax = 8.0, T = 1.0;
    const int I = 512, M = 10000;
    Density1D u0 = gaussian_bump(xmax, I, 3.0, 0.5);
    MarketPath mp = flat_path(T, M, 17);
    for (double rho1 : {1.0, -1.0}) {
        Series1D s = solve_1d(u0, VolPath::constant(s2), 0.0, rho1, mp);
        const double n0 = s.norm2.front(), nT = s.norm2.back();
        CHECK(std::abs(nT - n0) / n0 < 0.005);
    }
}

TEST_CASE("energy identity residual") {
    const double xmax = 8.0, T = 0.5;
    const double r = 0.25;
    const VolPath vol = VolPath::piecewise_linear(
        {0.0, 0.125, 0.25, 0.375, 0.5}, {0.09, 0.12, 0.09, 0.06, 0.09});

    auto max_residual = [&](int cells, int steps, double rho1, uint64_t key) {
        Density1D u0 = gaussian_bump(xmax, cells, 3.0, 0.5);
        MarketPath mp = flat_path(T, steps, key);
        Scheme1D sc;
        sc.store_every = steps;  // norms tracked every step regardless
        Series1D s = solve_1d(u0, vol, r, rho1, mp, sc);
        const auto res = energy_identity_residual(s, rho1);
        double m = 0.0;
        for (double v : res) m = std::max(m, std::abs(v));
        return m;
    };

    SUBCASE("starts at exactly zero") {
        Density1D u0 = gaussian_bump(xmax, 256, 3.0, 0.5);
        MarketPath mp = flat_path(T, 500, 23);
        Series1D s = solve_1d(u0, vol, r, 0.0, mp);
        CHECK(energy_identity_residual(s, 0.0)[0] == 0.0);
    }
    SUBCASE("deterministic case: small residual, halves under refinement") {
        const double base = max_residual(512, 5000, 0.0, 23);
        const double fine = max_residual(1024, 10000, 0.0, 23);
        CHECK(base < 1e-2);
        const double ratio = base / fine;
        CHECK(ratio > 1.7);
        CHECK(ratio < 2.3);
    }
    SUBCASE("stochastic case rho1 = 0.5") {
        const double base = max_residual(512, 5000, 0.5, 23);
        const double fine = max_residual(1024, 10000, 0.5, 23);
        CHECK(base < 1e-2);
        const double ratio = base / fine;
        CHECK(ratio > 1.7);
        CHECK(ratio < 2.3);
    }
    SUBCASE("rho1 = 1 reduces to norm preservation") {
        Density1D u0 = gaussian_bump(xmax, 512, 3.0, 0.5);
        MarketPath mp = flat_path(T, 5000, 29);
        Series1D s = solve_1d(u0, vol, 0.0, 1.0, mp);
        const auto res = energy_identity_residual(s, 1.0);
        for (size_t m = 0; m < res.size(); m += 500)
            CHECK(res[m] == doctest::Approx((s.norm2[m] - s.norm2[0]) / s.norm2[0])
                                .epsilon(1e-12));
    }
}

TEST_CASE("mass never increases step to step") {
    Density1D u0 = gaussian_bump(6.0, 512, 0.8, 0.25);
    MarketPath mp = flat_path(1.0, 5000, 31);
    Series1D s = solve_1d(u0, VolPath::constant(0.09), 0.03, 0.5, mp);
    for (size_t m = 1; m < s.mass.size(); ++m) CHECK(s.mass[m] <= s.mass[m - 1] + 1e-10);
    // and the loss curve is its mirror
    LossCurve lc = loss_1d(s);
    CHECK(lc.L[0] == doctest::Approx(1.0 - u0.mass()).epsilon(1e-12));
    for (size_t m = 1; m < lc.L.size(); ++m) CHECK(lc.L[m] >= lc.L[m - 1] - 1e-10);
}

TEST_CASE("constant-volatility loss matches the closed-form barrier law") {
    const double s = 0.3, x0 = 0.5, r = 0.03, T = 1.0;
    const int I = 512, M = 4000;
    Density1D u0 = density1d_point_mass(4.0, I, x0);
    MarketPath mp = flat_path(T, M, 37);
    Series1D series = solve_1d(u0, VolPath::constant(s * s), r, 0.0, mp);
    const double L = loss_1d(series).terminal();
    CHECK(std::abs(L - barrier_prob(x0, r, s, T)) < 1e-3);
}

TEST_CASE("piecewise-constant volatility vs its continuous interpolant") {
    // alternating 0.01 jumps: the piecewise-linear interpolant stays within
    // 0.01 of the piecewise-constant path everywhere
    std::vector<double> knots, vals;
    for (int j = 0; j <= 10; ++j) {
        knots.push_back(0.1 * j);
        vals.push_back(j % 2 == 0 ? 0.09 : 0.10);
    }
    const VolPath pc = VolPath::piecewise_constant(knots, vals);
    const VolPath pl = VolPath::piecewise_linear(knots, vals);

    Density1D u0 = gaussian_bump(6.0, 512, 0.8, 0.25);
    MarketPath mp = flat_path(1.0, 5000, 41);
    const double Lpc = loss_1d(solve_1d(u0, pc, 0.03, 0.5, mp)).terminal();
    const double Lpl = loss_1d(solve_1d(u0, pl, 0.03, 0.5, mp)).terminal();
    CHECK(std::abs(Lpc - Lpl) < 0.02);  // 2 * sup-gap * sqrt(T)
}

TEST_CASE("kernel-smoothed particle density agrees with the solver") {
    // constant vol, shared systemic path, rho1 = 0.5
    const double s2 = 0.09, T = 1.0, x0 = 0.8;
    const int M = 1000;
    MarketPath mp = flat_path(T, M, 53);

    const CoeffVector c{2.0, s2, 1e-8, 0.03, 0.5, 0.0};
    PortfolioSpec spec;
    spec.N = 100000;
    spec.coeffs = CoeffDistribution::point_mass(c);
    spec.global.h = HFunction::sqrt();
    spec.global.horizon = T;
    spec.initial.x0 = {InitialLaw::X0::Kind::Point, x0, 0.0};
    spec.initial.sigma0 = {InitialLaw::Sigma0::Kind::Point, s2, 0.0};
    spec.seed = 61;
    spec.workers = 4;
    spec.snapshot_steps = {M};
    PortfolioResult pr = simulate_portfolio(spec, mp);

    const int I = 512;
    const double xmax = 6.0;
    Density1D u0 = density1d_point_mass(xmax, I, x0);
    Scheme1D sc;
    sc.store_every = M;
    Series1D series = solve_1d(u0, VolPath::constant(s2), c.r, c.rho1, mp, sc);
    const Density1D& uT = series.snapshots.back();

    // plain Gaussian KDE of survivor positions, Silverman bandwidth,
    // normalized to survivor mass
    EmpiricalMeasure em = empirical_measure_at(pr, mp, T);
    std::vector<double> xs(em.survivors.size());
    for (size_t i = 0; i < xs.size(); ++i) xs[i] = em.survivors[i].first;
    const double h = silverman_bandwidth(xs);
    const double wgt = (1.0 - em.defaulted_mass) / (xs.size() * h * std::sqrt(2.0 * M_PI));

    double l1 = 0.0;
    for (int i = 0; i <= I; ++i) {
        const double x = i * uT.dx();
        double kde = 0.0;
        for (double xi : xs) {
            const double z = (x - xi) / h;
            if (std::abs(z) < 8.0) kde += std::exp(-0.5 * z * z);
        }
        kde *= wgt;
        l1 += std::abs(kde - uT.u[i]) * uT.dx();
    }
    CHECK(l1 < 0.05);
}
