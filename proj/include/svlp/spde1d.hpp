#pragma once

#include <vector>

#include "svlp/core_model.hpp"
#include "svlp/fdm.hpp"
#include "svlp/market_path.hpp"
#include "svlp/particle_system.hpp"

namespace svlp {

// Density on the uniform x-grid 0 = x_0 < ... < x_I = xmax with Dirichlet
// values u[0] = u[I] = 0.
struct Density1D {
    double xmax = 1.0;
    std::vector<double> u;  // I+1 nodes

    int cells() const { return static_cast<int>(u.size()) - 1; }
    double dx() const { return xmax / cells(); }
    double mass() const;     // trapezoid = dx * sum (ends vanish)
    double l2norm2() const;  // discrete squared L2 norm
    void validate() const;
};

// Deterministic variance path sigma_t (the squared volatility of the
// distance-to-default dynamics), sampled or interpolated on [0, T].
class VolPath {
  public:
    enum class Kind { Constant, PiecewiseConstant, PiecewiseLinear };

    static VolPath constant(double value);
    // knots at given times; piecewise-constant takes the left value
    static VolPath piecewise_constant(std::vector<double> times, std::vector<double> values);
    static VolPath piecewise_linear(std::vector<double> times, std::vector<double> values);

    double operator()(double t) const;
    double max_on(double T) const;
    Kind kind() const { return kind_; }

  private:
    Kind kind_ = Kind::Constant;
    std::vector<double> times_, values_;
};

struct Scheme1D {
    double cfl_c = 0.5;     // admissibility: dt <= cfl_c * dx^2 / max sigma
    int store_every = 1;    // snapshot stride (norms are stored every step)
    bool check_mass = true;
};

struct Series1D {
    double xmax = 0.0;
    int cells = 0;
    std::vector<double> times;              // every grid time
    std::vector<double> sigma;              // vol path sampled at grid times
    std::vector<double> norm2;              // ||u(t)||^2 per step
    std::vector<double> grad_norm2;         // ||u_x(t)||^2 per step (centered)
    std::vector<double> mass;               // integral of u per step
    std::vector<int> snapshot_steps;
    std::vector<Density1D> snapshots;

    const Density1D& snapshot_at_step(int m) const;
};

// Crank-Nicolson on drift+diffusion, explicit mass-conserving centered
// stochastic transport -sqrt(sigma_t) rho1 u_x dW0, Dirichlet at both ends.
Series1D solve_1d(const Density1D& u0, const VolPath& vol, double r, double rho1,
                  const MarketPath& mp, const Scheme1D& scheme = {});

// Normalized residual of the energy identity
//   ||u(t)||^2 + (1-rho1^2) int_0^t sigma_s ||u_x(s)||^2 ds = ||u0||^2,
// trapezoid in time, centered differences in space; returns R(t)/||u0||^2.
std::vector<double> energy_identity_residual(const Series1D& series, double rho1);

// L(t) = 1 - integral of u(t)
LossCurve loss_1d(const Series1D& series);

// Builds node values from a density function by exact cell-mass differencing
// (CDF supplied) or pointwise evaluation.
Density1D density1d_from_cdf(double xmax, int cells, const std::function<double(double)>& cdf);
Density1D density1d_point_mass(double xmax, int cells, double x0);

}  // namespace svlp
