#include "svlp/spde2d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace svlp {

double DensityField::mass() const {
    double s = 0.0;
    const int I = grid.I, J = grid.J;
    for (int i = 1; i < I; ++i)
        for (int j = 0; j < J; ++j) s += at(i, j);
    return s * grid.dx() * grid.dy();
}

void DensityField::validate() const {
    grid.validate();
    if (static_cast<int>(u.size()) != (grid.I + 1) * grid.J)
        throw ValidationError("density_field: size does not match grid");
    double mx = 0.0;
    for (double v : u) {
        if (!std::isfinite(v)) throw ValidationError("density_field: non-finite value");
        mx = std::max(mx, v);
    }
    for (int j = 0; j < grid.J; ++j)
        if (at(0, j) != 0.0) throw ValidationError("density_field: u(0, y) must vanish");
    for (double v : u)
        if (v < -1e-6 * std::max(mx, 1e-16))
            throw ValidationError("density_field: negative undershoot");
    const double m = mass();
    if (m < -1e-12 || m > 1.0 + 1e-6)
        throw ValidationError("density_field: mass outside [0, 1]");
}

const DensityField& Series2D::snapshot_at_step(int m) const {
    for (size_t k = 0; k < snapshot_steps.size(); ++k)
        if (snapshot_steps[k] == m) return snapshots[k];
    throw ValidationError("series2d: no snapshot stored at requested step");
}

double default_ymax(const CoeffVector& c) {
    return c.theta + 10.0 * c.xi * std::sqrt(c.theta / (2.0 * c.k));
}

namespace {

// Bernoulli function B(p) = p / (e^p - 1) for the exponentially fitted
// (Scharfetter-Gummel) flux; B(-p) = B(p) + p avoids overflow for large p.
double bernoulli_B(double p) {
    const double q = std::abs(p);
    double bq;
    if (q < 1e-8) {
        bq = 1.0 - 0.5 * q + q * q / 12.0;
    } else if (q > 700.0) {
        bq = 0.0;
    } else {
        bq = q * std::exp(-q) / (-std::expm1(-q));
    }
    return p >= 0.0 ? bq : bq + q;
}

}  // namespace

Spde2DSolver::Spde2DSolver(const CoeffVector& c, const GlobalParams& g, double rho,
                           Grid2D grid, Scheme2D scheme)
    : c_(c), g_(g), rho_(rho), grid_(grid), scheme_(scheme) {
    grid_.validate();
    if (!rho_admissible(c_, g_, rho_))
        throw ValidationError("spde2d: rho fails the admissibility condition "
                              "|rho - xi*rho3*rho1*rho2| <= xi*sqrt(1-rho1^2)*sqrt(1-rho2^2)");
    h_.resize(grid_.J);
    for (int j = 0; j < grid_.J; ++j) h_[j] = g_.h((j + 0.5) * grid_.dy());
    ysqrt_.resize(grid_.J + 1);
    for (int f = 0; f <= grid_.J; ++f) ysqrt_[f] = std::sqrt(f * grid_.dy());
    build_y_operator();
}

void Spde2DSolver::build_y_operator() {
    const int J = grid_.J;
    const double dy = grid_.dy();
    const double xi2 = c_.xi * c_.xi;

    // faces f = 0..J at y = f*dy; flux F = vtil*u - D*u_y with
    // vtil(y) = k(theta - y) - xi^2/2 and D(y) = xi^2 y / 2.
    std::vector<double> cL(J + 1, 0.0), cR(J + 1, 0.0);  // F_f = cL*u_{f-1} + cR*u_f
    for (int f = 1; f <= J; ++f) {
        const double y = f * dy;
        const double D = 0.5 * xi2 * y;
        const double vt = c_.k * (c_.theta - y) - 0.5 * xi2;
        if (D > 0.0) {
            const double p = vt * dy / D;
            cL[f] = (D / dy) * bernoulli_B(-p);
            cR[f] = -(D / dy) * bernoulli_B(p);
        } else {  // degenerate: plain upwind advection
            if (vt >= 0.0)
                cL[f] = vt;
            else
                cR[f] = vt;
        }
    }
    // y = 0 face: inflow value is zero (solution vanishes below the domain);
    // under k*theta > xi^2/2 the advection points inward and the flux is 0.
    const double vt0 = c_.k * c_.theta - 0.5 * xi2;
    f0_coef_ = vt0 >= 0.0 ? 0.0 : vt0;

    ylo_.assign(J, 0.0);
    ydi_.assign(J, 0.0);
    yup_.assign(J, 0.0);
    const double inv = 1.0 / dy;
    for (int cidx = 0; cidx < J; ++cidx) {
        // (A u)_c = (F_c - F_{c+1}) / dy
        if (cidx > 0) ylo_[cidx] += cL[cidx] * inv;
        ydi_[cidx] += (cidx > 0 ? cR[cidx] : f0_coef_) * inv;
        ydi_[cidx] -= cL[cidx + 1] * inv;
        yup_[cidx] -= cR[cidx + 1] * inv;
    }
    // top face keeps only the u_{J-1} leg (ghost above is zero)
}

void Spde2DSolver::x_sweep(DensityField& f, double dt) {
    const int I = grid_.I, J = grid_.J;
    const double dx = grid_.dx();
    CnLine line(I + 1, dx);
    std::vector<double>& buf = scratch_a_;
    buf.resize(I + 1);
    for (int j = 0; j < J; ++j) {
        for (int i = 0; i <= I; ++i) buf[i] = f.at(i, j);
        const double h2 = h_[j] * h_[j];
        line.step(buf, dt, c_.r - 0.5 * h2, 0.5 * h2, c_.r - 0.5 * h2, 0.5 * h2);
        for (int i = 0; i <= I; ++i) f.at(i, j) = buf[i];
    }
}

void Spde2DSolver::y_sweep(DensityField& f, double dt) {
    const int I = grid_.I, J = grid_.J;
    auto& lo = scratch_a_;
    auto& di = scratch_b_;
    auto& up = scratch_c_;
    auto& rhs = scratch_d_;
    auto& tmp = scratch_e_;
    lo.resize(J);
    di.resize(J);
    up.resize(J);
    rhs.resize(J);
    for (int i = 1; i < I; ++i) {
        double* row = &f.u[static_cast<size_t>(i) * J];
        for (int cidx = 0; cidx < J; ++cidx) {
            const double Au = (cidx > 0 ? ylo_[cidx] * row[cidx - 1] : 0.0) +
                              ydi_[cidx] * row[cidx] +
                              (cidx + 1 < J ? yup_[cidx] * row[cidx + 1] : 0.0);
            rhs[cidx] = row[cidx] + 0.5 * dt * Au;
            lo[cidx] = -0.5 * dt * ylo_[cidx];
            di[cidx] = 1.0 - 0.5 * dt * ydi_[cidx];
            up[cidx] = -0.5 * dt * yup_[cidx];
        }
        solve_tridiagonal(lo, di, up, rhs, tmp);
        for (int cidx = 0; cidx < J; ++cidx) row[cidx] = rhs[cidx];
    }
}

void Spde2DSolver::cross_term(DensityField& f, double dt) {
    if (rho_ == 0.0) return;
    const int I = grid_.I, J = grid_.J;
    const double dx = grid_.dx(), dy = grid_.dy();
    auto& G = scratch_d_;
    G.assign(f.u.size(), 0.0);
    for (int i = 1; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            const double y = (j + 0.5) * dy;
            G[static_cast<size_t>(i) * J + j] = h_[j] * std::sqrt(y) * f.at(i, j);
        }
    const double s = dt * rho_ / (4.0 * dx * dy);
    auto g = [&](int i, int j) -> double {
        if (j < 0 || j >= J) return 0.0;  // solution vanishes outside y-range
        return G[static_cast<size_t>(i) * J + j];
    };
    auto& upd = scratch_e_;
    upd.assign(f.u.size(), 0.0);
    for (int i = 1; i < I; ++i)
        for (int j = 0; j < J; ++j)
            upd[static_cast<size_t>(i) * J + j] =
                s * (g(i + 1, j + 1) - g(i - 1, j + 1) - g(i + 1, j - 1) + g(i - 1, j - 1));
    for (size_t n = 0; n < f.u.size(); ++n) f.u[n] += upd[n];
}

void Spde2DSolver::noise_x(DensityField& f, double dW0) {
    if (c_.rho1 == 0.0 || dW0 == 0.0) return;
    const int I = grid_.I, J = grid_.J;
    const double dx = grid_.dx();
    auto& col = scratch_a_;
    auto& grad = scratch_b_;
    col.resize(I + 1);
    for (int j = 0; j < J; ++j) {
        const double a = c_.rho1 * h_[j] * dW0;
        if (a == 0.0) continue;
        for (int i = 0; i <= I; ++i) col[i] = f.at(i, j);
        apply_gradient_masscons(col, dx, grad);
        for (int i = 1; i < I; ++i) f.at(i, j) -= a * grad[i];
    }
}

void Spde2DSolver::noise_y(DensityField& f, double dB0) {
    const double coef = c_.xi * c_.rho2 * dB0;
    if (coef == 0.0) return;
    const int I = grid_.I, J = grid_.J;
    const double dy = grid_.dy();
    auto& H = scratch_a_;
    H.resize(J + 1);
    for (int i = 1; i < I; ++i) {
        double* row = &f.u[static_cast<size_t>(i) * J];
        H[0] = 0.0;  // sqrt(0) kills the flux at the degenerate edge
        for (int fidx = 1; fidx < J; ++fidx)
            H[fidx] = ysqrt_[fidx] * 0.5 * (row[fidx - 1] + row[fidx]);
        H[J] = ysqrt_[J] * 0.5 * row[J - 1];
        for (int cidx = 0; cidx < J; ++cidx)
            row[cidx] -= coef * (H[cidx + 1] - H[cidx]) / dy;
    }
}

void Spde2DSolver::check_field(const DensityField& f, int step, const char* term) const {
    for (double v : f.u)
        if (!std::isfinite(v)) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "spde2d: non-finite value first produced by term '%s' at step %d",
                          term, step);
            throw SolverError(buf);
        }
}

void Spde2DSolver::step(DensityField& f, double dt, double dW0, double dB0,
                        MassLedger* ledger) {
    const int step_idx = steps_taken_++;
    const bool track = ledger != nullptr;
    double m0 = track ? f.mass() : 0.0;

    x_sweep(f, dt);
    check_field(f, step_idx, "x drift/diffusion");
    if (track) {
        const double m1 = f.mass();
        ledger->x_outflux = m0 - m1;
        m0 = m1;
    }

    // top-face flux of the y-sweep, Crank-Nicolson average
    double top_before = 0.0;
    const int I = grid_.I, J = grid_.J;
    if (track) {
        for (int i = 1; i < I; ++i) top_before += f.at(i, J - 1);
    }
    y_sweep(f, dt);
    check_field(f, step_idx, "y drift/diffusion");
    if (track) {
        double top_after = 0.0, bot = 0.0;
        for (int i = 1; i < I; ++i) {
            top_after += f.at(i, J - 1);
            bot += f.at(i, 0);
        }
        const double dy = grid_.dy();
        const double y = J * dy;
        const double D = 0.5 * c_.xi * c_.xi * y;
        const double vt = c_.k * (c_.theta - y) - 0.5 * c_.xi * c_.xi;
        double flux_coef;  // F_J = flux_coef * u_{J-1}
        if (D > 0.0)
            flux_coef = (D / dy) * bernoulli_B(-vt * dy / D);
        else
            flux_coef = std::max(vt, 0.0);
        const double outflux =
            dt * flux_coef * 0.5 * (top_before + top_after) * grid_.dx();
        const double f0flux = dt * f0_coef_ * bot * grid_.dx();  // 0 under Feller
        const double m1 = f.mass();
        ledger->ymax_outflux = m0 - m1;
        ledger->y0_leak = std::abs((m0 - m1) - outflux + f0flux);
        m0 = m1;
    }

    cross_term(f, dt);
    check_field(f, step_idx, "mixed xy");
    if (track) {
        const double m1 = f.mass();
        ledger->cross_defect = m0 - m1;
        m0 = m1;
    }

    noise_x(f, dW0);
    check_field(f, step_idx, "stochastic x transport");
    noise_y(f, dB0);
    check_field(f, step_idx, "stochastic y transport");
    if (track) {
        const double m1 = f.mass();
        ledger->noise_defect = m0 - m1;
    }
    f.t += dt;
}

Series2D Spde2DSolver::solve(const DensityField& u0, const MarketPath& mp) {
    u0.validate();
    if (u0.mass() > 1.0 + 1e-9) throw ValidationError("spde2d: initial mass must be <= 1");
    const double dt = mp.dt(0);
    const double dx = grid_.dx(), dy = grid_.dy();
    double h2max = 0.0;
    for (double h : h_) h2max = std::max(h2max, h * h);
    double bound = std::numeric_limits<double>::infinity();
    if (h2max > 0.0) bound = dx * dx / h2max;
    const double ydiff = c_.xi * c_.xi * grid_.ymax;
    if (ydiff > 0.0) bound = std::min(bound, dy * dy / ydiff);
    if (dt > scheme_.cfl_c * bound) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "spde2d: CFL violation, dt=%.3e exceeds c*min(dx^2/max h^2, "
                      "dy^2/(xi^2 ymax))=%.3e",
                      dt, scheme_.cfl_c * bound);
        throw ValidationError(buf);
    }

    const int M = mp.steps();
    Series2D out;
    out.grid = grid_;
    out.times = mp.times;
    out.mass.resize(M + 1);
    out.loss.times = mp.times;
    out.loss.L.resize(M + 1);
    if (scheme_.track_mass_ledger) out.ledger.resize(M);

    DensityField f = u0;
    out.mass[0] = f.mass();
    out.loss.L[0] = 1.0 - out.mass[0];
    auto snap = [&](int m, const DensityField& fld) {
        out.snapshot_steps.push_back(m);
        out.snapshots.push_back(fld);
    };
    snap(0, f);

    for (int m = 0; m < M; ++m) {
        MassLedger* led = scheme_.track_mass_ledger ? &out.ledger[m] : nullptr;
        step(f, mp.dt(m), mp.dW0[m], mp.dB0[m], led);
        out.mass[m + 1] = f.mass();
        if (out.mass[m + 1] > out.mass[m] + 1e-4) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "spde2d: mass increased beyond tolerance at step %d",
                          m);
            throw SolverError(buf);
        }
        double raw = 1.0 - out.mass[m + 1];
        if (raw < out.loss.L[m]) {
            if (led) led->clamp = out.loss.L[m] - raw;
            raw = out.loss.L[m];
            ++out.clamped_steps;
        }
        out.loss.L[m + 1] = raw;

        double mx = 0.0;
        for (double v : f.u) mx = std::max(mx, v);
        for (double v : f.u)
            if (v < -1e-6 * std::max(mx, 1e-16)) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "spde2d: undershoot beyond tolerance at step %d",
                              m);
                throw SolverError(buf);
            }

        if ((scheme_.store_every > 0 && (m + 1) % scheme_.store_every == 0) || m + 1 == M)
            snap(m + 1, f);
    }
    return out;
}

Series2D solve_spde2d(const CoeffVector& c, const GlobalParams& g, double rho,
                      const DensityField& u0, const MarketPath& mp, const Scheme2D& scheme) {
    Spde2DSolver solver(c, g, rho, u0.grid, scheme);
    return solver.solve(u0, mp);
}

std::vector<double> marginal_y(const DensityField& f) {
    std::vector<double> m(f.grid.J, 0.0);
    for (int j = 0; j < f.grid.J; ++j) {
        double s = 0.0;
        for (int i = 1; i < f.grid.I; ++i) s += f.at(i, j);
        m[j] = s * f.grid.dx();
    }
    return m;
}

namespace {

struct WeakFormTables {
    std::vector<double> f, Af, hfx, syfy;
    double supf = 0.0;
};

WeakFormTables build_tables(const Grid2D& grid, const CoeffVector& c, const GlobalParams& g,
                            const TestFunction& tf) {
    const int I = grid.I, J = grid.J;
    WeakFormTables t;
    const size_t n = static_cast<size_t>(I + 1) * J;
    t.f.resize(n);
    t.Af.resize(n);
    t.hfx.resize(n);
    t.syfy.resize(n);
    const double rho_eff = compute_rho(c, g);
    for (int j = 0; j < J; ++j) {
        const double y = (j + 0.5) * grid.dy();
        const double h = g.h(y);
        if (std::abs(tf.f(0.0, y)) > 1e-12)
            throw ValidationError("weak_form: test function must vanish at x = 0");
        for (int i = 0; i <= I; ++i) {
            const double x = i * grid.dx();
            const size_t idx = static_cast<size_t>(i) * J + j;
            const double fv = tf.f(x, y);
            t.f[idx] = fv;
            t.supf = std::max(t.supf, std::abs(fv));
            t.Af[idx] = (c.r - 0.5 * h * h) * tf.fx(x, y) + c.k * (c.theta - y) * tf.fy(x, y) +
                        0.5 * h * h * tf.fxx(x, y) + 0.5 * c.xi * c.xi * y * tf.fyy(x, y) +
                        rho_eff * h * std::sqrt(y) * tf.fxy(x, y);
            t.hfx[idx] = h * tf.fx(x, y);
            t.syfy[idx] = std::sqrt(y) * tf.fy(x, y);
        }
    }
    return t;
}

double dot_measure(const DensityField& fld, const std::vector<double>& tab) {
    double s = 0.0;
    const int I = fld.grid.I, J = fld.grid.J;
    for (int i = 1; i < I; ++i)
        for (int j = 0; j < J; ++j)
            s += fld.at(i, j) * tab[static_cast<size_t>(i) * J + j];
    return s * fld.grid.dx() * fld.grid.dy();
}

}  // namespace

std::vector<double> weak_form_residual(const Series2D& series, const MarketPath& mp,
                                       const CoeffVector& c, const GlobalParams& g,
                                       const TestFunction& tf) {
    const int M = mp.steps();
    if (static_cast<int>(series.snapshots.size()) != M + 1)
        throw ValidationError("weak_form: series must store every step (store_every = 1)");
    WeakFormTables t = build_tables(series.grid, c, g, tf);
    if (t.supf <= 0.0) t.supf = 1.0;

    std::vector<double> F(M + 1), A(M + 1), W(M + 1), B(M + 1);
    for (int m = 0; m <= M; ++m) {
        const DensityField& fld = series.snapshots[m];
        F[m] = dot_measure(fld, t.f);
        A[m] = dot_measure(fld, t.Af);
        W[m] = dot_measure(fld, t.hfx);
        B[m] = dot_measure(fld, t.syfy);
    }
    std::vector<double> res(M + 1, 0.0);
    double ds = 0.0, dw = 0.0, db = 0.0;
    for (int m = 1; m <= M; ++m) {
        const double dt = mp.dt(m - 1);
        ds += 0.5 * dt * (A[m - 1] + A[m]);          // time integral, trapezoid
        dw += c.rho1 * W[m - 1] * mp.dW0[m - 1];     // Ito sums, left point
        db += c.xi * c.rho2 * B[m - 1] * mp.dB0[m - 1];
        res[m] = (F[m] - F[0] - ds - dw - db) / t.supf;
    }
    return res;
}

std::vector<double> weak_form_residual_particles(const PortfolioSpec& spec,
                                                 const MarketPath& mp,
                                                 const TestFunction& tf) {
    if (!spec.coeffs.is_point_mass())
        throw ValidationError("weak_form: particle residual needs point-mass coefficients");
    CounterRng probe(0);
    const CoeffVector c = spec.coeffs.sample(probe);
    const GlobalParams& g = spec.global;
    const double rho_eff = compute_rho(c, g);
    if (std::abs(tf.f(0.0, 1.0)) > 1e-12 || std::abs(tf.f(0.0, 0.1)) > 1e-12)
        throw ValidationError("weak_form: test function must vanish at x = 0");

    const int M = mp.steps();
    std::vector<double> F(M + 1, 0.0), A(M + 1, 0.0), W(M + 1, 0.0), B(M + 1, 0.0);
    double supf = 0.0;

    auto accumulate = [&](int idx, const std::vector<ParticleState>& states) {
        double sf = 0.0, sa = 0.0, sw = 0.0, sb = 0.0;
        for (const auto& s : states) {
            if (s.defaulted) continue;  // f(0, y) = 0
            const double x = s.X, y = s.sigma;
            const double h = g.h(std::max(y, 0.0));
            const double fv = tf.f(x, y);
            supf = std::max(supf, std::abs(fv));
            sf += fv;
            sa += (c.r - 0.5 * h * h) * tf.fx(x, y) + c.k * (c.theta - y) * tf.fy(x, y) +
                  0.5 * h * h * tf.fxx(x, y) + 0.5 * c.xi * c.xi * y * tf.fyy(x, y) +
                  rho_eff * h * std::sqrt(std::max(y, 0.0)) * tf.fxy(x, y);
            sw += h * tf.fx(x, y);
            sb += std::sqrt(std::max(y, 0.0)) * tf.fy(x, y);
        }
        const double n = static_cast<double>(states.size());
        F[idx] = sf / n;
        A[idx] = sa / n;
        W[idx] = sw / n;
        B[idx] = sb / n;
    };

    PortfolioSpec sp = spec;
    sp.snapshot_steps = {0};
    StepObserver obs = [&](int m, const std::vector<ParticleState>& states) {
        accumulate(m + 1, states);
    };
    PortfolioResult res = simulate_portfolio(sp, mp, obs);
    accumulate(0, res.snapshots.at(0));

    if (supf <= 0.0) supf = 1.0;
    std::vector<double> out(M + 1, 0.0);
    double ds = 0.0, dw = 0.0, db = 0.0;
    for (int m = 1; m <= M; ++m) {
        const double dt = mp.dt(m - 1);
        ds += 0.5 * dt * (A[m - 1] + A[m]);
        dw += c.rho1 * W[m - 1] * mp.dW0[m - 1];
        db += c.xi * c.rho2 * B[m - 1] * mp.dB0[m - 1];
        out[m] = (F[m] - F[0] - ds - dw - db) / supf;
    }
    return out;
}

DensityField product_initial_field(const Grid2D& grid, const std::vector<double>& ux,
                                   const std::vector<double>& py_cellmass) {
    if (static_cast<int>(ux.size()) != grid.I + 1)
        throw ValidationError("initial field: x node count mismatch");
    if (static_cast<int>(py_cellmass.size()) != grid.J)
        throw ValidationError("initial field: y cell count mismatch");
    DensityField f;
    f.grid = grid;
    f.u.assign(static_cast<size_t>(grid.I + 1) * grid.J, 0.0);
    const double dy = grid.dy();
    for (int i = 1; i < grid.I; ++i)
        for (int j = 0; j < grid.J; ++j) f.at(i, j) = ux[i] * py_cellmass[j] / dy;
    return f;
}

std::vector<double> x_density_from_law(const InitialLaw::X0& law, double xmax, int cells) {
    if (law.kind == InitialLaw::X0::Kind::Point) {
        Density1D d = density1d_point_mass(xmax, cells, law.a);
        return d.u;
    }
    auto cdf = [&](double x) {
        if (x <= 0.0) return 0.0;
        return 0.5 * std::erfc(-(std::log(x) - law.a) / (law.b * std::sqrt(2.0)));
    };
    Density1D d = density1d_from_cdf(xmax, cells, cdf);
    return d.u;
}

std::vector<double> y_cellmass_from_law(const InitialLaw::Sigma0& law, double ymax,
                                        int cells) {
    std::vector<double> mass(cells, 0.0);
    const double dy = ymax / cells;
    if (law.kind == InitialLaw::Sigma0::Kind::Point) {
        const double s0 = law.a;
        int j = static_cast<int>(std::floor(s0 / dy - 0.5));
        j = std::clamp(j, 0, cells - 2);
        double w = (s0 - (j + 0.5) * dy) / dy;  // split preserving the mean
        w = std::clamp(w, 0.0, 1.0);
        mass[j] = 1.0 - w;
        mass[j + 1] = w;
        return mass;
    }
    // gamma density integrated per cell by composite Simpson, then normalized
    const double shape = law.a, scale = law.b;
    auto pdf = [&](double y) {
        if (y <= 0.0) return 0.0;
        return std::exp((shape - 1.0) * std::log(y) - y / scale - std::lgamma(shape) -
                        shape * std::log(scale));
    };
    double total = 0.0;
    for (int j = 0; j < cells; ++j) {
        const double lo = j * dy;
        const int sub = 8;
        double s = 0.0;
        for (int q = 0; q < sub; ++q) {
            const double a = lo + q * dy / sub;
            const double b = lo + (q + 1) * dy / sub;
            s += (pdf(a) + 4.0 * pdf(0.5 * (a + b)) + pdf(b)) * (b - a) / 6.0;
        }
        mass[j] = s;
        total += s;
    }
    if (total <= 0.0) throw ValidationError("initial.sigma0: gamma mass vanishes on grid");
    for (double& v : mass) v /= total;
    return mass;
}

DensityField initial_field_from_laws(const Grid2D& grid, const InitialLaw& law) {
    law.validate();
    return product_initial_field(grid, x_density_from_law(law.x0, grid.xmax, grid.I),
                                 y_cellmass_from_law(law.sigma0, grid.ymax, grid.J));
}

void write_field_bin(const std::string& path, const DensityField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("write_field_bin: cannot open " + path);
    const char magic[8] = {'S', 'V', 'L', 'P', 'F', 'L', 'D', '1'};
    os.write(magic, 8);
    const int32_t I = f.grid.I, J = f.grid.J;
    os.write(reinterpret_cast<const char*>(&I), 4);
    os.write(reinterpret_cast<const char*>(&J), 4);
    os.write(reinterpret_cast<const char*>(&f.grid.xmax), 8);
    os.write(reinterpret_cast<const char*>(&f.grid.ymax), 8);
    os.write(reinterpret_cast<const char*>(&f.t), 8);
    os.write(reinterpret_cast<const char*>(f.u.data()),
             static_cast<std::streamsize>(f.u.size() * 8));
}

DensityField read_field_bin(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("read_field_bin: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, "SVLPFLD1", 8) != 0)
        throw ValidationError("read_field_bin: bad magic");
    int32_t I = 0, J = 0;
    is.read(reinterpret_cast<char*>(&I), 4);
    is.read(reinterpret_cast<char*>(&J), 4);
    DensityField f;
    f.grid.I = I;
    f.grid.J = J;
    is.read(reinterpret_cast<char*>(&f.grid.xmax), 8);
    is.read(reinterpret_cast<char*>(&f.grid.ymax), 8);
    is.read(reinterpret_cast<char*>(&f.t), 8);
    f.u.resize(static_cast<size_t>(I + 1) * J);
    is.read(reinterpret_cast<char*>(f.u.data()), static_cast<std::streamsize>(f.u.size() * 8));
    if (!is) throw ValidationError("read_field_bin: truncated file");
    return f;
}

}  // namespace svlp
