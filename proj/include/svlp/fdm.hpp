#pragma once

#include <vector>

namespace svlp {

// Tridiagonal system a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i, solved by the
// Thomas algorithm. All matrices assembled in this project are diagonally
// dominant, so no pivoting is needed.
void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b,
                       const std::vector<double>& c, std::vector<double>& d,
                       std::vector<double>& scratch);

// Crank-Nicolson line operator on the x-nodes 0..I of a Dirichlet interval
// (u[0] = u[I] = 0):  du/dt = -adv * u_x + diff * u_xx, with first-order
// upwinding of the advection and centered diffusion.
//
// Assembled as (I - dt/2 A_new) u' = (I + dt/2 A_old) u; coefficients may
// differ between the two half-steps (time-varying volatility paths).
class CnLine {
  public:
    CnLine(int nodes, double dx);

    // one CN step in place; adv/diff evaluated at the old and new time level
    void step(std::vector<double>& u, double dt, double adv_old, double diff_old,
              double adv_new, double diff_new);

  private:
    int n_;  // number of nodes (I+1)
    double dx_;
    std::vector<double> lo_, di_, up_, rhs_, scratch_;
};

// One explicit step of the stochastic transport du = -a u_x (a carries the
// Brownian increment) on Dirichlet x-nodes, in conservative flux form:
//   u_i -= (F_i - F_{i-1}) / dx,  F_i = a * face value between nodes i, i+1.
// Interior faces use the centered average (exactly energy-neutral and
// mass-conserving, matching the continuum identity); faces within `window`
// of either boundary use the upwind value, which keeps the scheme monotone
// where the absorbing boundary steepens the profile and makes the boundary
// flux outflow-only. The operator is linear in u: the upwind direction
// depends on the sign of the noise, never on the solution.
void apply_transport_flux(std::vector<double>& u, double dx, double a, int window,
                          std::vector<double>& face_scratch);

}  // namespace svlp
