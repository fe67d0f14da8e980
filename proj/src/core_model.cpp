#include "svlp/core_model.hpp"

#include <algorithm>
#include <cmath>

namespace svlp {

namespace {
bool finite(double x) { return std::isfinite(x); }
}  // namespace

void CoeffVector::validate(bool strict) const {
    for (auto [v, name] : {std::pair{k, "coeff.k"}, {theta, "coeff.theta"}, {xi, "coeff.xi"},
                           {r, "coeff.r"}, {rho1, "coeff.rho1"}, {rho2, "coeff.rho2"}}) {
        if (!finite(v)) throw ValidationError(std::string(name) + ": non-finite value");
    }
    if (k <= 0.0) throw ValidationError("coeff.k: must be > 0");
    if (theta <= 0.0) throw ValidationError("coeff.theta: must be > 0");
    if (xi <= 0.0) throw ValidationError("coeff.xi: must be > 0");
    if (!(rho1 > -1.0 && rho1 < 1.0)) throw ValidationError("coeff.rho1: must lie in (-1,1)");
    if (!(rho2 > -1.0 && rho2 < 1.0)) throw ValidationError("coeff.rho2: must lie in (-1,1)");
    if (strict && !(k * theta > 0.75 * xi * xi))
        throw ValidationError("coeff: strict validation requires k*theta > (3/4)*xi^2");
}

FellerClass feller_check(const CoeffVector& c) {
    for (double v : {c.k, c.theta, c.xi, c.r, c.rho1, c.rho2})
        if (!finite(v)) throw ValidationError("feller_check: non-finite coefficient");
    const double kt = c.k * c.theta;
    const double xi2 = c.xi * c.xi;
    if (kt > 0.75 * xi2) return FellerClass::StrongFeller;
    if (kt > 0.5 * xi2) return FellerClass::FellerOnly;
    return FellerClass::Violated;
}

HFunction HFunction::tabulated(std::vector<std::pair<double, double>> table) {
    if (table.size() < 2) throw ValidationError("h.table: needs at least two points");
    std::sort(table.begin(), table.end());
    for (size_t i = 0; i < table.size(); ++i) {
        if (!finite(table[i].first) || !finite(table[i].second))
            throw ValidationError("h.table: non-finite entry");
        if (table[i].second < 0.0) throw ValidationError("h.table: h must be nonnegative");
        if (i > 0 && table[i].first == table[i - 1].first)
            throw ValidationError("h.table: duplicate abscissa");
    }
    return HFunction(Kind::Tabulated, std::move(table));
}

double HFunction::operator()(double y) const {
    switch (kind_) {
        case Kind::Sqrt:
            return std::sqrt(y);
        case Kind::Identity:
            return y;
        case Kind::Tabulated: {
            if (y <= table_.front().first) return table_.front().second;
            if (y >= table_.back().first) return table_.back().second;
            auto it = std::upper_bound(table_.begin(), table_.end(), y,
                                       [](double v, const auto& p) { return v < p.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (y - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second);
        }
    }
    return 0.0;
}

void GlobalParams::validate() const {
    if (!finite(rho3) || rho3 < -1.0 || rho3 > 1.0)
        throw ValidationError("global.rho3: must lie in [-1,1]");
    if (!(horizon > 0.0)) throw ValidationError("global.T: must be > 0");
    for (auto [v, name] : {std::pair{w1, "global.w1"}, {b1, "global.b1"}}) {
        if (!finite(v) || v < -1.0 || v > 1.0)
            throw ValidationError(std::string(name) + ": must lie in [-1,1]");
    }
    if (h.kind() == HFunction::Kind::Tabulated) {
        // nonnegativity and (flat-extrapolated) growth checked by sampling
        const auto& t = h.table();
        const double lo = t.front().first, hi = t.back().first;
        for (int i = 0; i <= 64; ++i) {
            const double y = lo + (hi - lo) * i / 64.0 + (i == 64 ? 1.0 : 0.0);
            if (h(std::max(y, 0.0)) < 0.0) throw ValidationError("global.h: negative value");
        }
    }
}

double h_eval(const GlobalParams& g, double y) {
    if (!(y >= 0.0)) throw ValidationError("h_eval: y must be >= 0");
    return g.h(y);
}

double compute_rho(const CoeffVector& c, const GlobalParams& g) {
    const double base = c.xi * g.rho3 * c.rho1 * c.rho2;
    const double extra = c.xi * std::sqrt(1.0 - c.rho1 * c.rho1) *
                         std::sqrt(1.0 - c.rho2 * c.rho2) * std::sqrt(1.0 - g.w1 * g.w1) *
                         std::sqrt(1.0 - g.b1 * g.b1);
    return base + extra;
}

bool rho_admissible(const CoeffVector& c, const GlobalParams& g, double rho) {
    const double lhs = std::abs(rho - c.xi * g.rho3 * c.rho1 * c.rho2);
    const double rhs =
        c.xi * std::sqrt(1.0 - c.rho1 * c.rho1) * std::sqrt(1.0 - c.rho2 * c.rho2);
    return lhs <= rhs + 1e-15;
}

double FieldSampler::sample(CounterRng& rng) const {
    switch (kind) {
        case Kind::Point:
            return a;
        case Kind::Uniform:
            return a + (b - a) * rng.u01();
        case Kind::Lognormal:
            return std::exp(a + b * rng.normal());
    }
    return a;
}

CoeffVector CoeffDistribution::sample(CounterRng& rng) const {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        CoeffVector c;
        c.k = k.sample(rng);
        c.theta = theta.sample(rng);
        c.xi = xi.sample(rng);
        c.r = r.sample(rng);
        c.rho1 = rho1.sample(rng);
        c.rho2 = rho2.sample(rng);
        try {
            c.validate(strict);
            return c;
        } catch (const ValidationError&) {
            // resample
        }
    }
    throw ValidationError("coeff.distribution: no valid draw within attempt cap");
}

CoeffDistribution CoeffDistribution::point_mass(const CoeffVector& c, bool strict) {
    CoeffDistribution d;
    d.k = FieldSampler::point(c.k);
    d.theta = FieldSampler::point(c.theta);
    d.xi = FieldSampler::point(c.xi);
    d.r = FieldSampler::point(c.r);
    d.rho1 = FieldSampler::point(c.rho1);
    d.rho2 = FieldSampler::point(c.rho2);
    d.strict = strict;
    return d;
}

bool CoeffDistribution::is_point_mass() const {
    auto pt = [](const FieldSampler& f) { return f.kind == FieldSampler::Kind::Point; };
    return pt(k) && pt(theta) && pt(xi) && pt(r) && pt(rho1) && pt(rho2);
}

}  // namespace svlp
