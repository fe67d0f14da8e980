#include "svlp/cir.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace svlp {

CirState cir_step_ft(const CirState& state, const CoeffVector& c, double dt,
                     const NoisePair& noise) {
    if (!(dt > 0.0)) throw ValidationError("cir_step_ft: dt must be > 0");
    const double splus = std::max(state.sigma, 0.0);
    const double diff = c.xi * std::sqrt(splus) *
                        (std::sqrt(1.0 - c.rho2 * c.rho2) * noise.dB1 + c.rho2 * noise.dB0);
    const double next = state.sigma + c.k * (c.theta - splus) * dt + diff;
    return {std::max(next, 0.0), state.t + dt};
}

double cir_mean(const CoeffVector& c, double sigma0, double t) {
    if (t < 0.0) throw ValidationError("cir_mean: t must be >= 0");
    return c.theta + (sigma0 - c.theta) * std::exp(-c.k * t);
}

double cir_variance(const CoeffVector& c, double sigma0, double t) {
    const double e = std::exp(-c.k * t);
    const double xi2k = c.xi * c.xi / c.k;
    return sigma0 * xi2k * (e - e * e) + 0.5 * c.theta * xi2k * (1.0 - e) * (1.0 - e);
}

namespace {

struct Transition {
    double scale;   // xi^2 (1 - e^{-kt}) / (4k)
    double dof;     // 4 k theta / xi^2
    double lambda;  // noncentrality
};

Transition transition_params(const CoeffVector& c, double sigma0, double t) {
    const double e = std::exp(-c.k * t);
    const double scale = c.xi * c.xi * (1.0 - e) / (4.0 * c.k);
    return {scale, c.chi2_dof(), sigma0 * e / scale};
}

// log density of the central chi-square with n dof at x > 0
double log_chi2_pdf(double x, double n) {
    return (0.5 * n - 1.0) * std::log(0.5 * x) - 0.5 * x - std::log(2.0) -
           std::lgamma(0.5 * n);
}

// noncentral chi-square density via the Poisson mixture, expanding from the
// dominant term in both directions
double nc_chi2_pdf(double x, double dof, double lambda) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
        if (dof > 2.0) return 0.0;
        if (dof == 2.0) return 0.5 * std::exp(-0.5 * lambda);
        return std::numeric_limits<double>::infinity();
    }
    if (lambda <= 0.0) return std::exp(log_chi2_pdf(x, dof));

    const double lh = 0.5 * lambda;
    auto log_term = [&](long j) {
        return -lh + j * std::log(lh) - std::lgamma(j + 1.0) + log_chi2_pdf(x, dof + 2.0 * j);
    };
    // crude index of the dominant Poisson-mixture term
    long j0 = static_cast<long>(0.25 * (std::sqrt(dof * dof + 4.0 * lambda * x) - dof));
    j0 = std::max<long>(j0, 0);

    const double lmax = log_term(j0);
    double sum = 1.0;
    for (long j = j0 + 1;; ++j) {
        const double t = std::exp(log_term(j) - lmax);
        sum += t;
        if (t < 1e-18 * sum || j > j0 + 100000) break;
    }
    for (long j = j0 - 1; j >= 0; --j) {
        const double t = std::exp(log_term(j) - lmax);
        sum += t;
        if (t < 1e-18 * sum) break;
    }
    return std::exp(lmax) * sum;
}

}  // namespace

double cir_density(const CoeffVector& c, double sigma0, double t, double y) {
    if (!(t > 0.0)) throw ValidationError("cir_density: t must be > 0");
    if (y < 0.0) throw ValidationError("cir_density: y must be >= 0");
    const Transition tr = transition_params(c, sigma0, t);
    return nc_chi2_pdf(y / tr.scale, tr.dof, tr.lambda) / tr.scale;
}

double cir_exact_sample(const CoeffVector& c, double sigma0, double t, CounterRng& rng) {
    if (!(t > 0.0)) throw ValidationError("cir_exact_sample: t must be > 0");
    if (sigma0 < 0.0) throw ValidationError("cir_exact_sample: sigma0 must be >= 0");
    const Transition tr = transition_params(c, sigma0, t);
    if (tr.dof <= 1.0)
        throw ValidationError("cir_exact_sample: requires 4*k*theta/xi^2 > 1");
    const double z = rng.normal() + std::sqrt(tr.lambda);
    double y = z * z;
    // chi^2_{d-1} as Gamma((d-1)/2, 2)
    std::gamma_distribution<double> gamma(0.5 * (tr.dof - 1.0), 2.0);
    y += gamma(rng);
    return tr.scale * y;
}

SupDensityReport verify_sup_density_bound(const CoeffVector& c, double sigma0, double T,
                                          double alpha, int nt, int ny, double t_min_frac) {
    if (feller_check(c) != FellerClass::StrongFeller)
        throw ValidationError(
            "verify_sup_density_bound: strong Feller condition k*theta > (3/4)*xi^2 required");
    if (c.rho2 != 0.0)
        throw ValidationError("verify_sup_density_bound: only the rho2 = 0 reduction is computable");
    if (alpha < 0.0) throw ValidationError("verify_sup_density_bound: alpha must be >= 0");

    const double t_min = t_min_frac * T;  // keeps clear of the Dirac initial condition
    // y range wide enough to cover the transition law over [t_min, T]
    double ymax = 0.0;
    for (double t : {t_min, T, 0.5 * (t_min + T)}) {
        const double m = cir_mean(c, sigma0, t);
        const double s = std::sqrt(cir_variance(c, sigma0, t));
        ymax = std::max(ymax, m + 10.0 * s);
    }

    auto scan = [&](int nt_, int ny_) {
        double best = 0.0, bt = t_min, by = 0.0;
        for (int it = 0; it < nt_; ++it) {
            const double t = t_min + (T - t_min) * it / (nt_ - 1.0);
            for (int iy = 1; iy <= ny_; ++iy) {
                const double y = ymax * iy / static_cast<double>(ny_);
                const double v = std::pow(y, alpha) * cir_density(c, sigma0, t, y);
                if (!std::isfinite(v))
                    throw SolverError("verify_sup_density_bound: non-finite density value");
                if (v > best) {
                    best = v;
                    bt = t;
                    by = y;
                }
            }
        }
        return std::tuple{best, bt, by};
    };

    SupDensityReport rep;
    auto [s1, t1, y1] = scan(nt, ny);
    auto [s2, t2, y2] = scan(2 * nt, 2 * ny);
    (void)t2;
    (void)y2;
    rep.sup = s1;
    rep.argmax_t = t1;
    rep.argmax_y = y1;
    rep.refined_sup = s2;
    rep.rel_change = std::abs(s2 - s1) / std::max(s1, 1e-300);
    rep.stable = rep.rel_change < 0.01;
    return rep;
}

SupMomentEstimate estimate_sup_moment(const CoeffVector& c, double sigma0, double T,
                                      double p, int n_paths, double dt, uint64_t seed) {
    if (p < 0.0) throw ValidationError("estimate_sup_moment: p must be >= 0");
    if (n_paths < 100) throw ValidationError("estimate_sup_moment: n_paths must be >= 100");
    const int steps = std::max(1, static_cast<int>(std::llround(T / dt)));
    const double h = T / steps;

    auto one_path = [&](uint64_t idx) {
        CounterRng rng(derive_key(derive_key(seed, stream::paths), idx));
        double s = sigma0;
        double sup = std::pow(s, p);
        for (int m = 0; m < steps; ++m) {
            s = cir_exact_sample(c, s, h, rng);
            sup = std::max(sup, std::pow(s, p));
        }
        return sup;
    };

    auto accumulate = [&](int n) {
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = one_path(static_cast<uint64_t>(i));
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / n;
        const double var = std::max(0.0, sumsq / n - mean * mean);
        return std::pair{mean, std::sqrt(var / n)};
    };

    SupMomentEstimate est;
    std::tie(est.value, est.stderr_) = accumulate(n_paths);
    std::tie(est.value2, est.stderr2) = accumulate(2 * n_paths);
    const double pooled = std::sqrt(est.stderr_ * est.stderr_ + est.stderr2 * est.stderr2);
    est.stable = std::abs(est.value - est.value2) <= 3.0 * pooled + 1e-12;
    return est;
}

}  // namespace svlp
