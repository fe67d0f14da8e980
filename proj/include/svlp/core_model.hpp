#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svlp/rng.hpp"

namespace svlp {

// Thrown when an input fails contract validation. The message names the
// offending quantity so the CLI can surface it (exit code 1).
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a numerical scheme breaks down (exit code 2).
class SolverError : public std::runtime_error {
  public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

enum class FellerClass { StrongFeller, FellerOnly, Violated };

// One asset-class parameter tuple (k, theta, xi, r, rho1, rho2).
struct CoeffVector {
    double k = 1.0;      // mean-reversion rate
    double theta = 1.0;  // long-run variance level
    double xi = 1.0;     // vol-of-vol
    double r = 0.0;      // drift rate
    double rho1 = 0.0;   // asset-market correlation
    double rho2 = 0.0;   // vol-market correlation

    // Throws ValidationError naming the first violated condition.
    // strict additionally enforces k*theta > (3/4)*xi^2.
    void validate(bool strict) const;

    // 4*k*theta/xi^2, the CIR degrees-of-freedom parameter
    double chi2_dof() const { return 4.0 * k * theta / (xi * xi); }
};

FellerClass feller_check(const CoeffVector& c);

// h-function: maps variance to volatility. Tabulated kind interpolates
// linearly and extrapolates flat, which keeps polynomial growth trivially.
class HFunction {
  public:
    enum class Kind { Sqrt, Identity, Tabulated };

    HFunction() : kind_(Kind::Sqrt) {}
    static HFunction sqrt() { return HFunction(Kind::Sqrt, {}); }
    static HFunction identity() { return HFunction(Kind::Identity, {}); }
    static HFunction tabulated(std::vector<std::pair<double, double>> table);

    double operator()(double y) const;
    Kind kind() const { return kind_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

  private:
    HFunction(Kind kind, std::vector<std::pair<double, double>> table)
        : kind_(kind), table_(std::move(table)) {}
    Kind kind_;
    std::vector<std::pair<double, double>> table_;
};

struct GlobalParams {
    double rho3 = 0.0;  // correlation of (W0, B0)
    HFunction h;
    double horizon = 1.0;  // T
    double w1 = 1.0;       // idiosyncratic cross-correlation loadings;
    double b1 = 1.0;       // 1 means uncorrelated idiosyncratic noises

    void validate() const;
};

double h_eval(const GlobalParams& g, double y);

// Effective cross-correlation entering the mixed-derivative term of the
// two-dimensional equation:
//   rho = xi*rho3*rho1*rho2 + xi*sqrt(1-rho1^2)*sqrt(1-rho2^2)
//                               *sqrt(1-w1^2)*sqrt(1-b1^2)
double compute_rho(const CoeffVector& c, const GlobalParams& g);

// |rho - xi*rho3*rho1*rho2| <= xi*sqrt(1-rho1^2)*sqrt(1-rho2^2)
bool rho_admissible(const CoeffVector& c, const GlobalParams& g, double rho);

// Per-field sampler for CoeffVector entries.
struct FieldSampler {
    enum class Kind { Point, Uniform, Lognormal };
    Kind kind = Kind::Point;
    double a = 0.0;  // point value / lower bound / log-mean
    double b = 0.0;  // upper bound / log-sd

    double sample(CounterRng& rng) const;
    static FieldSampler point(double v) { return {Kind::Point, v, 0.0}; }
    static FieldSampler uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
    static FieldSampler lognormal(double mu, double sd) { return {Kind::Lognormal, mu, sd}; }
};

// Independent per-field samplers; draws are rejected and redrawn until the
// CoeffVector invariants hold, with an attempt cap.
struct CoeffDistribution {
    FieldSampler k, theta, xi, r, rho1, rho2;
    bool strict = true;
    int max_attempts = 1000;

    CoeffVector sample(CounterRng& rng) const;
    static CoeffDistribution point_mass(const CoeffVector& c, bool strict = true);
    bool is_point_mass() const;
};

}  // namespace svlp
