#include "svlp/spde1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace svlp {

double Density1D::mass() const {
    double s = 0.0;
    for (size_t i = 1; i + 1 < u.size(); ++i) s += u[i];
    s += 0.5 * (u.front() + u.back());
    return s * dx();
}

double Density1D::l2norm2() const {
    double s = 0.0;
    for (size_t i = 1; i + 1 < u.size(); ++i) s += u[i] * u[i];
    s += 0.5 * (u.front() * u.front() + u.back() * u.back());
    return s * dx();
}

void Density1D::validate() const {
    if (u.size() < 3) throw ValidationError("density1d: needs at least 3 nodes");
    if (!(xmax > 0.0)) throw ValidationError("density1d: xmax must be > 0");
    if (u.front() != 0.0) throw ValidationError("density1d: u[0] must be 0 (Dirichlet)");
    double mx = 0.0;
    for (double v : u) {
        if (!std::isfinite(v)) throw ValidationError("density1d: non-finite value");
        mx = std::max(mx, v);
    }
    for (double v : u)
        if (v < -1e-8 * mx) throw ValidationError("density1d: negative undershoot");
}

VolPath VolPath::constant(double value) {
    if (!(value > 0.0)) throw ValidationError("vol_path: values must be > 0");
    VolPath v;
    v.kind_ = Kind::Constant;
    v.values_ = {value};
    return v;
}

VolPath VolPath::piecewise_constant(std::vector<double> times, std::vector<double> values) {
    if (times.size() != values.size() || times.size() < 2)
        throw ValidationError("vol_path: need matching times/values with >= 2 knots");
    for (double v : values)
        if (!(v > 0.0)) throw ValidationError("vol_path: values must be > 0");
    VolPath v;
    v.kind_ = Kind::PiecewiseConstant;
    v.times_ = std::move(times);
    v.values_ = std::move(values);
    return v;
}

VolPath VolPath::piecewise_linear(std::vector<double> times, std::vector<double> values) {
    VolPath v = piecewise_constant(std::move(times), std::move(values));
    v.kind_ = Kind::PiecewiseLinear;
    return v;
}

double VolPath::operator()(double t) const {
    if (kind_ == Kind::Constant) return values_[0];
    if (t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const size_t hi = static_cast<size_t>(std::distance(times_.begin(), it));
    const size_t lo = hi - 1;
    if (kind_ == Kind::PiecewiseConstant) return values_[lo];
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    return values_[lo] + w * (values_[hi] - values_[lo]);
}

double VolPath::max_on(double T) const {
    if (kind_ == Kind::Constant) return values_[0];
    double m = 0.0;
    for (size_t i = 0; i < times_.size(); ++i)
        if (times_[i] <= T || i == 0) m = std::max(m, values_[i]);
    m = std::max(m, (*this)(T));
    return m;
}

const Density1D& Series1D::snapshot_at_step(int m) const {
    for (size_t k = 0; k < snapshot_steps.size(); ++k)
        if (snapshot_steps[k] == m) return snapshots[k];
    throw ValidationError("series1d: no snapshot stored at requested step");
}

namespace {

double grad_norm2_centered(const std::vector<double>& u, double dx) {
    double s = 0.0;
    for (size_t i = 1; i + 1 < u.size(); ++i) {
        const double g = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        s += g * g;
    }
    return s * dx;
}

}  // namespace

Series1D solve_1d(const Density1D& u0, const VolPath& vol, double r, double rho1,
                  const MarketPath& mp, const Scheme1D& scheme) {
    u0.validate();
    if (u0.mass() > 1.0 + 1e-9) throw ValidationError("solve_1d: initial mass must be <= 1");
    if (!(rho1 > -1.0 - 1e-15 && rho1 < 1.0 + 1e-15))
        throw ValidationError("solve_1d: rho1 must lie in [-1,1]");

    const int I = u0.cells();
    const double dx = u0.dx();
    const double T = mp.horizon();
    const double sig_max = vol.max_on(T);
    const double dt0 = mp.dt(0);
    const double dt_req = scheme.cfl_c * dx * dx / sig_max;
    if (dt0 > dt_req) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "solve_1d: CFL violation, dt=%.3e exceeds c*dx^2/max sigma=%.3e", dt0,
                      dt_req);
        throw ValidationError(buf);
    }

    Series1D out;
    out.xmax = u0.xmax;
    out.cells = I;
    out.times = mp.times;

    std::vector<double> u = u0.u;
    CnLine line(I + 1, dx);
    std::vector<double> faces;
    const int upwind_window = 8;

    const int M = mp.steps();
    out.sigma.resize(M + 1);
    out.norm2.resize(M + 1);
    out.grad_norm2.resize(M + 1);
    out.mass.resize(M + 1);

    auto record = [&](int m) {
        out.sigma[m] = vol(mp.times[m]);
        double n2 = 0.0, ms = 0.0;
        for (int i = 1; i < I; ++i) {
            n2 += u[i] * u[i];
            ms += u[i];
        }
        out.norm2[m] = n2 * dx;
        out.mass[m] = ms * dx;
        out.grad_norm2[m] = grad_norm2_centered(u, dx);
        if (m % scheme.store_every == 0 || m == M) {
            out.snapshot_steps.push_back(m);
            out.snapshots.push_back(Density1D{u0.xmax, u});
        }
    };
    record(0);

    for (int m = 0; m < M; ++m) {
        const double dt = mp.dt(m);
        const double s_old = vol(mp.times[m]);
        const double s_new = vol(mp.times[m + 1]);
        const double mass_before = out.mass[m];

        // deterministic drift + diffusion, Crank-Nicolson
        line.step(u, dt, r - 0.5 * s_old, 0.5 * s_old, r - 0.5 * s_new, 0.5 * s_new);

        // stochastic transport -sqrt(sigma) rho1 u_x dW0, Ito left point
        if (rho1 != 0.0) {
            const double a = std::sqrt(s_old) * rho1 * mp.dW0[m];
            apply_gradient_masscons(u, dx, grad);
            for (int i = 1; i < I; ++i) u[i] -= a * grad[i];
        }

        double mx = 0.0;
        for (int i = 1; i < I; ++i) mx = std::max(mx, u[i]);
        for (int i = 1; i < I; ++i) {
            if (!std::isfinite(u[i])) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "solve_1d: non-finite value at step %d", m);
                throw SolverError(buf);
            }
            if (u[i] < -1e-8 * std::max(mx, 1e-16)) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "solve_1d: undershoot at step %d", m);
                throw SolverError(buf);
            }
        }
        record(m + 1);
        if (scheme.check_mass && out.mass[m + 1] > mass_before + 1e-10) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "solve_1d: mass increased at step %d", m);
            throw SolverError(buf);
        }
    }
    return out;
}

std::vector<double> energy_identity_residual(const Series1D& series, double rho1) {
    const double n0 = series.norm2[0];
    std::vector<double> res(series.norm2.size(), 0.0);
    double integral = 0.0;
    for (size_t m = 1; m < series.norm2.size(); ++m) {
        const double dt = series.times[m] - series.times[m - 1];
        integral += 0.5 * dt *
                    (series.sigma[m - 1] * series.grad_norm2[m - 1] +
                     series.sigma[m] * series.grad_norm2[m]);
        res[m] = (series.norm2[m] + (1.0 - rho1 * rho1) * integral - n0) / n0;
    }
    return res;
}

LossCurve loss_1d(const Series1D& series) {
    LossCurve lc;
    lc.times = series.times;
    lc.L.resize(series.mass.size());
    for (size_t m = 0; m < series.mass.size(); ++m) lc.L[m] = 1.0 - series.mass[m];
    return lc;
}

Density1D density1d_from_cdf(double xmax, int cells,
                             const std::function<double(double)>& cdf) {
    Density1D d;
    d.xmax = xmax;
    d.u.assign(cells + 1, 0.0);
    const double dx = xmax / cells;
    // node i owns [x_i - dx/2, x_i + dx/2); Dirichlet ends stay zero
    for (int i = 1; i < cells; ++i) {
        const double lo = (i - 0.5) * dx;
        const double hi = (i + 0.5) * dx;
        d.u[i] = (cdf(hi) - cdf(lo)) / dx;
    }
    return d;
}

Density1D density1d_point_mass(double xmax, int cells, double x0) {
    if (!(x0 > 0.0 && x0 < xmax)) throw ValidationError("density1d: x0 must be in (0, xmax)");
    Density1D d;
    d.xmax = xmax;
    d.u.assign(cells + 1, 0.0);
    const double dx = xmax / cells;
    const int i = std::clamp(static_cast<int>(std::floor(x0 / dx)), 1, cells - 2);
    const double w = x0 / dx - i;  // linear split preserves the first moment
    d.u[i] += (1.0 - w) / dx;
    d.u[i + 1] += w / dx;
    return d;
}

}  // namespace svlp
