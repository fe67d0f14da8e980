#pragma once

#include <functional>
#include <string>
#include <vector>

#include "svlp/core_model.hpp"
#include "svlp/market_path.hpp"
#include "svlp/particle_system.hpp"
#include "svlp/spde1d.hpp"

namespace svlp {

// Nonnegative grid function on the truncated quarter-plane. x is
// node-centered (i = 0..I, Dirichlet u = 0 at i = 0 and i = I); y is
// cell-centered (j = 0..J-1 at y_j = (j + 1/2) dy), which leaves the
// degenerate y = 0 edge without an imposed boundary condition: all y-fluxes
// vanish there through the coefficients y and sqrt(y) themselves.
struct DensityField {
    Grid2D grid;
    double t = 0.0;
    std::vector<double> u;  // (I+1) * J, row-major in x

    double& at(int i, int j) { return u[static_cast<size_t>(i) * grid.J + j]; }
    double at(int i, int j) const { return u[static_cast<size_t>(i) * grid.J + j]; }
    double x_node(int i) const { return i * grid.dx(); }
    double y_cell(int j) const { return (j + 0.5) * grid.dy(); }
    double mass() const;
    void validate() const;
};

struct Scheme2D {
    double cfl_c = 2.0;  // dt <= cfl_c * min(dx^2 / max h^2, dy^2 / (xi^2 ymax))
    int store_every = 0; // 0: keep only initial and final field
    bool track_mass_ledger = true;
};

// Per-step mass accounting. y0_leak is the defect between the y-sweep mass
// change and the flux through the Ymax face; it isolates anything escaping
// through the degenerate y = 0 edge (structurally zero for this scheme).
struct MassLedger {
    double x_outflux = 0.0;     // deterministic x-sweep boundary loss
    double ymax_outflux = 0.0;  // y-sweep loss through the top face
    double y0_leak = 0.0;
    double cross_defect = 0.0;  // explicit mixed term boundary defect
    double noise_defect = 0.0;  // stochastic transports (x boundary transport)
    double clamp = 0.0;         // loss clamp applied when extracting L
};

struct Series2D {
    Grid2D grid;
    std::vector<double> times;
    std::vector<double> mass;  // per grid time
    LossCurve loss;            // L = 1 - mass, clamped nondecreasing
    int clamped_steps = 0;
    std::vector<int> snapshot_steps;
    std::vector<DensityField> snapshots;
    std::vector<MassLedger> ledger;  // per step

    const DensityField& snapshot_at_step(int m) const;
};

// default y-truncation: theta + 10 stationary standard deviations
double default_ymax(const CoeffVector& c);

class Spde2DSolver {
  public:
    // rho is the mixed-term coefficient (compute_rho for the model value);
    // must satisfy rho_admissible.
    Spde2DSolver(const CoeffVector& c, const GlobalParams& g, double rho, Grid2D grid,
                 Scheme2D scheme = {});

    // advances all nine terms over one market-path step
    void step(DensityField& f, double dt, double dW0, double dB0, MassLedger* ledger = nullptr);

    Series2D solve(const DensityField& u0, const MarketPath& mp);

    const Grid2D& grid() const { return grid_; }

  private:
    void build_y_operator();
    void x_sweep(DensityField& f, double dt);
    void y_sweep(DensityField& f, double dt);
    void cross_term(DensityField& f, double dt);
    void noise_x(DensityField& f, double dW0);
    void noise_y(DensityField& f, double dB0);
    void check_field(const DensityField& f, int step, const char* term) const;

    CoeffVector c_;
    GlobalParams g_;
    double rho_;
    Grid2D grid_;
    Scheme2D scheme_;
    std::vector<double> h_;       // h(y_j) per cell
    std::vector<double> ysqrt_;   // sqrt(y) at faces
    std::vector<double> ylo_, ydi_, yup_;  // SG flux operator bands
    double f0_coef_ = 0.0;        // y=0 face outflow coefficient (nonzero only
                                  // when k*theta - xi^2/2 < 0)
    int steps_taken_ = 0;
    std::vector<double> scratch_a_, scratch_b_, scratch_c_, scratch_d_, scratch_e_;
};

Series2D solve_spde2d(const CoeffVector& c, const GlobalParams& g, double rho,
                      const DensityField& u0, const MarketPath& mp,
                      const Scheme2D& scheme = {});

// survivor y-marginal: integral of u over x (its mass equals 1 - L)
std::vector<double> marginal_y(const DensityField& f);

// C^2 test function with f(0, y) = 0 for the weak-form functional
struct TestFunction {
    std::function<double(double, double)> f, fx, fy, fxx, fyy, fxy;
};

// Residual of the Theorem-2.6 weak form evaluated on a solved series,
// normalized by sup |f| over the grid.
std::vector<double> weak_form_residual(const Series2D& series, const MarketPath& mp,
                                       const CoeffVector& c, const GlobalParams& g,
                                       const TestFunction& f);

// Same functional evaluated on the particle system (statistics accumulated
// during simulation); returns the residual per grid time.
std::vector<double> weak_form_residual_particles(const PortfolioSpec& spec,
                                                 const MarketPath& mp,
                                                 const TestFunction& f);

// product initial field u0(x) (x) p0(y) from node values and cell masses
DensityField product_initial_field(const Grid2D& grid, const std::vector<double>& ux,
                                   const std::vector<double>& py_cellmass);

// initial fields from the config initial laws
DensityField initial_field_from_laws(const Grid2D& grid, const InitialLaw& law);
std::vector<double> x_density_from_law(const InitialLaw::X0& law, double xmax, int cells);
std::vector<double> y_cellmass_from_law(const InitialLaw::Sigma0& law, double ymax, int cells);

// compact binary field dump (header + row-major doubles) and reader
void write_field_bin(const std::string& path, const DensityField& f);
DensityField read_field_bin(const std::string& path);

}  // namespace svlp
