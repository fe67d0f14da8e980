#pragma once

#include <vector>

#include "svlp/core_model.hpp"

namespace svlp {

// Weighted L^2 norm over a y-range with weight y^delta; the theory needs
// delta > -1 for the weight to be integrable at 0. delta = -1 is kept
// representable so the documented obstruction can be demonstrated.
struct WeightedNorm {
    double delta = 0.0;
    bool check_range = true;  // reject delta <= -1 when set

    void validate() const {
        if (check_range && !(delta > -1.0))
            throw ValidationError("weighted_norm: delta must be > -1");
    }
};

struct NormResult {
    double value = 0.0;
    bool tail_warning = false;  // last-quarter contribution dominates the head
};

// Heat kernel composed with a square root:
//   phi_eps(z, y) = exp(-(sqrt(z) - y)^2 / (2 eps)) / sqrt(2 pi eps)
double phi_eps(double z, double y, double eps);

// Uniform grid of samples; value(i) pairs with point(i) = lo + i*step.
struct GridFn {
    double lo = 0.0;
    double step = 0.0;
    std::vector<double> v;

    int size() const { return static_cast<int>(v.size()); }
    double point(int i) const { return lo + i * step; }
    double interp(double x) const;  // linear, zero outside the grid
};

// J_{u,eps}(y) = integral of u(z) phi_eps(z, y) dz, trapezoid over u's grid.
// Warns (returns flag) when dz > eps/4, i.e. the grid under-resolves the kernel.
struct SmoothResult {
    std::vector<double> J;  // on the y-grid
    bool dz_warning = false;
};
SmoothResult smooth_J(const GridFn& u, const std::vector<double>& ygrid, double eps);

// The eps -> 0 limit object J_u(y) = 2 y u(y^2)
double J_limit(const GridFn& u, double y);
std::vector<double> J_limit(const GridFn& u, const std::vector<double>& ygrid);

// sqrt(int y^delta f(y)^2 dy) on the given y-grid (trapezoid). When the grid
// starts at y = 0 and delta < 0, the first cell is integrated in closed form
// against the y^delta singularity with f frozen at the first positive node.
NormResult weighted_l2(const std::vector<double>& f, const std::vector<double>& ygrid,
                       const WeightedNorm& w);

// Gaussian KDE of the conditional variance density from survivor sigma
// values, performed in the v = sqrt(sigma) coordinate and mapped back.
// eps <= 0 selects Silverman's rule in the v-coordinate. The estimate is
// normalized to total_mass (survivor fraction).
std::vector<double> kde_conditional_density(const std::vector<double>& sigma_values,
                                            double eps, const std::vector<double>& ygrid,
                                            double total_mass = 1.0);

double silverman_bandwidth(const std::vector<double>& values);

}  // namespace svlp
