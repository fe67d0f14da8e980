#include "svlp/smoothing.hpp"

#include <algorithm>
#include <cmath>

namespace svlp {

double phi_eps(double z, double y, double eps) {
    if (z < 0.0) throw ValidationError("phi_eps: z must be >= 0");
    if (!(eps > 0.0)) throw ValidationError("phi_eps: eps must be > 0");
    const double d = std::sqrt(z) - y;
    return std::exp(-d * d / (2.0 * eps)) / std::sqrt(2.0 * M_PI * eps);
}

double GridFn::interp(double x) const {
    const double pos = (x - lo) / step;
    if (pos <= 0.0) return pos == 0.0 ? v.front() : (pos > -1e-12 ? v.front() : 0.0);
    const int i = static_cast<int>(std::floor(pos));
    if (i >= size() - 1) return pos <= size() - 1 + 1e-12 ? v.back() : 0.0;
    const double w = pos - i;
    return v[i] * (1.0 - w) + v[i + 1] * w;
}

SmoothResult smooth_J(const GridFn& u, const std::vector<double>& ygrid, double eps) {
    if (!(eps > 0.0)) throw ValidationError("smooth_J: eps must be > 0");
    SmoothResult out;
    out.dz_warning = u.step > eps / 4.0;
    out.J.resize(ygrid.size(), 0.0);
    const int n = u.size();
    for (size_t k = 0; k < ygrid.size(); ++k) {
        const double y = ygrid[k];
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            s += w * u.v[i] * phi_eps(u.point(i), y, eps);
        }
        out.J[k] = s * u.step;
    }
    return out;
}

double J_limit(const GridFn& u, double y) {
    if (y < 0.0) throw ValidationError("J_limit: y must be >= 0");
    return 2.0 * y * u.interp(y * y);
}

std::vector<double> J_limit(const GridFn& u, const std::vector<double>& ygrid) {
    std::vector<double> out(ygrid.size());
    for (size_t k = 0; k < ygrid.size(); ++k) out[k] = J_limit(u, ygrid[k]);
    return out;
}

NormResult weighted_l2(const std::vector<double>& f, const std::vector<double>& ygrid,
                       const WeightedNorm& w) {
    w.validate();
    if (f.size() != ygrid.size() || f.size() < 2)
        throw ValidationError("weighted_l2: f and ygrid must match with >= 2 points");

    auto integrand = [&](size_t i) { return std::pow(ygrid[i], w.delta) * f[i] * f[i]; };

    double total = 0.0, tail = 0.0;
    size_t start = 0;
    if (ygrid[0] == 0.0) {
        if (w.delta < 0.0) {
            // closed-form first cell: f(y1)^2 * int_0^{y1} y^delta dy
            total += f[1] * f[1] * std::pow(ygrid[1], w.delta + 1.0) / (w.delta + 1.0);
            start = 1;
        }
        // delta >= 0: y^delta f^2 is finite at 0 (0^0 treated as 1)
    }
    const size_t tail_from = ygrid.size() - (ygrid.size() - start) / 4;
    for (size_t i = start; i + 1 < ygrid.size(); ++i) {
        const double a = (ygrid[i] == 0.0 && w.delta == 0.0) ? f[i] * f[i] : integrand(i);
        const double b = integrand(i + 1);
        const double piece = 0.5 * (a + b) * (ygrid[i + 1] - ygrid[i]);
        total += piece;
        if (i >= tail_from) tail += piece;
    }
    NormResult res;
    res.value = std::sqrt(std::max(total, 0.0));
    res.tail_warning = tail > 1e-8 * (total - tail) && total > 0.0;
    return res;
}

double silverman_bandwidth(const std::vector<double>& values) {
    const size_t n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
    return std::max(h, 1e-6);  // floor keeps degenerate samples usable
}

std::vector<double> kde_conditional_density(const std::vector<double>& sigma_values,
                                            double eps, const std::vector<double>& ygrid,
                                            double total_mass) {
    if (sigma_values.size() < 2)
        throw ValidationError("kde: needs at least 2 survivor values");
    std::vector<double> v(sigma_values.size());
    for (size_t i = 0; i < v.size(); ++i) {
        if (sigma_values[i] < 0.0) throw ValidationError("kde: negative variance value");
        v[i] = std::sqrt(sigma_values[i]);
    }
    const double h = eps > 0.0 ? eps : silverman_bandwidth(v);
    const double norm = total_mass / (static_cast<double>(v.size()) * h * std::sqrt(2.0 * M_PI));

    std::vector<double> out(ygrid.size(), 0.0);
    for (size_t k = 0; k < ygrid.size(); ++k) {
        const double y = ygrid[k];
        if (y <= 0.0) continue;  // mapped density is defined for y > 0
        const double ry = std::sqrt(y);
        double s = 0.0;
        for (double vi : v) {
            const double d = (ry - vi) / h;
            s += std::exp(-0.5 * d * d);
        }
        out[k] = norm * s / (2.0 * ry);
    }
    return out;
}

}  // namespace svlp
