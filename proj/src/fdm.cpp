#include "svlp/fdm.hpp"

#include <cstddef>

namespace svlp {

void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b,
                       const std::vector<double>& c, std::vector<double>& d,
                       std::vector<double>& scratch) {
    const size_t n = b.size();
    scratch.resize(n);
    double beta = b[0];
    d[0] /= beta;
    for (size_t i = 1; i < n; ++i) {
        scratch[i] = c[i - 1] / beta;
        beta = b[i] - a[i] * scratch[i];
        d[i] = (d[i] - a[i] * d[i - 1]) / beta;
    }
    for (size_t i = n - 1; i-- > 0;) d[i] -= scratch[i + 1] * d[i + 1];
}

CnLine::CnLine(int nodes, double dx) : n_(nodes), dx_(dx) {
    const size_t m = static_cast<size_t>(n_ - 2);  // interior unknowns
    lo_.resize(m);
    di_.resize(m);
    up_.resize(m);
    rhs_.resize(m);
    scratch_.resize(m);
}

void CnLine::step(std::vector<double>& u, double dt, double adv_old, double diff_old,
                  double adv_new, double diff_new) {
    const int I = n_ - 1;
    const size_t m = static_cast<size_t>(I - 1);

    // A u |_i = diff*(u_{i-1}-2u_i+u_{i+1})/dx^2 - adv*upwind(u_x)
    auto stencil = [&](double adv, double diff, double& cl, double& cd, double& cu) {
        const double lam = diff / (dx_ * dx_);
        cl = lam;
        cd = -2.0 * lam;
        cu = lam;
        if (adv >= 0.0) {  // -adv*(u_i - u_{i-1})/dx
            cl += adv / dx_;
            cd -= adv / dx_;
        } else {  // -adv*(u_{i+1} - u_i)/dx
            cd += adv / dx_;
            cu -= adv / dx_;
        }
    };

    double ol, od, ou, nl, nd, nu;
    stencil(adv_old, diff_old, ol, od, ou);
    stencil(adv_new, diff_new, nl, nd, nu);

    for (size_t k = 0; k < m; ++k) {
        const int i = static_cast<int>(k) + 1;
        lo_[k] = -0.5 * dt * nl;
        di_[k] = 1.0 - 0.5 * dt * nd;
        up_[k] = -0.5 * dt * nu;
        rhs_[k] = u[i] + 0.5 * dt * (ol * u[i - 1] + od * u[i] + ou * u[i + 1]);
    }
    solve_tridiagonal(lo_, di_, up_, rhs_, scratch_);
    for (size_t k = 0; k < m; ++k) u[static_cast<int>(k) + 1] = rhs_[k];
    u[0] = 0.0;
    u[I] = 0.0;
}

void apply_transport_flux(std::vector<double>& u, double dx, double a, int window,
                          std::vector<double>& face_scratch) {
    if (a == 0.0) return;
    const int I = static_cast<int>(u.size()) - 1;
    auto& F = face_scratch;  // F[i]: flux through the face between nodes i, i+1
    F.resize(I);
    for (int i = 0; i < I; ++i) {
        const bool upwind = i < window || i >= I - window;
        const double face = upwind ? (a > 0.0 ? u[i] : u[i + 1])
                                   : 0.5 * (u[i] + u[i + 1]);
        F[i] = a * face;
    }
    const double inv = 1.0 / dx;
    for (int i = 1; i < I; ++i) u[i] -= (F[i] - F[i - 1]) * inv;
}

}  // namespace svlp
