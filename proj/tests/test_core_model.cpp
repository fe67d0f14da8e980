#include <doctest.h>

#include <cmath>

#include "svlp/core_model.hpp"

using namespace svlp;

namespace {
CoeffVector mk(double k, double theta, double xi, double r = 0.0, double rho1 = 0.0,
               double rho2 = 0.0) {
    return CoeffVector{k, theta, xi, r, rho1, rho2};
}
}  // namespace

TEST_CASE("feller classification") {
    CHECK(feller_check(mk(2, 1, 1)) == FellerClass::StrongFeller);
    CHECK(feller_check(mk(1, 0.7, 1)) == FellerClass::FellerOnly);
    CHECK(feller_check(mk(1, 0.4, 1)) == FellerClass::Violated);
    // boundary: k*theta == 0.75 xi^2 is not strong
    CHECK(feller_check(mk(1, 0.75, 1)) == FellerClass::FellerOnly);
    CHECK_THROWS_AS(feller_check(mk(std::nan(""), 1, 1)), ValidationError);
}

TEST_CASE("strict validation accepts exactly the strong-Feller set") {
    CHECK_NOTHROW(mk(2, 1, 1).validate(true));
    CHECK_THROWS_AS(mk(1, 0.7, 1).validate(true), ValidationError);
    CHECK_NOTHROW(mk(1, 0.7, 1).validate(false));
    CHECK_THROWS_AS(mk(-1, 1, 1).validate(false), ValidationError);
    CHECK_THROWS_AS(mk(1, 1, 1, 0, 1.0, 0).validate(false), ValidationError);
}

TEST_CASE("compute_rho") {
    GlobalParams g;
    g.rho3 = 0.5;

    SUBCASE("w1 = b1 = 1 reduces to the product term") {
        CoeffVector c = mk(2, 1, 0.7, 0, 0.3, -0.4);
        g.w1 = 1.0;
        g.b1 = 1.0;
        CHECK(compute_rho(c, g) == doctest::Approx(0.7 * 0.5 * 0.3 * -0.4).epsilon(1e-15));
    }
    SUBCASE("vanishes when rho1 = 0 and w1 = 1") {
        CoeffVector c = mk(2, 1, 1, 0, 0.0, 0.5);
        g.w1 = 1.0;
        g.b1 = 0.3;
        CHECK(compute_rho(c, g) == doctest::Approx(0.0));
    }
    SUBCASE("hand-evaluated full formula") {
        CoeffVector c = mk(2, 1, 1.0, 0, 0.6, 0.5);
        g.w1 = 0.0;
        g.b1 = 0.0;
        // 0.15 + 0.8 * sqrt(3)/2
        CHECK(compute_rho(c, g) == doctest::Approx(0.8428203230275509).epsilon(1e-12));
    }
}

TEST_CASE("rho admissibility") {
    GlobalParams g;
    g.rho3 = 0.0;
    CoeffVector c = mk(2, 1, 1, 0, 0.0, 0.0);
    CHECK(rho_admissible(c, g, 0.0));
    CHECK_FALSE(rho_admissible(c, g, 1.5));

    // compute_rho always lands inside the admissible band
    uint64_t key = 77;
    for (int trial = 0; trial < 10000; ++trial) {
        CounterRng rng(derive_key(key, trial));
        CoeffVector cc = mk(0.5 + 4 * rng.u01(), 0.1 + rng.u01(), 0.0, 0.0, 0.0, 0.0);
        cc.xi = 0.1 + std::sqrt(4.0 * cc.k * cc.theta / 3.0) * 0.9 * rng.u01();
        cc.rho1 = -0.99 + 1.98 * rng.u01();
        cc.rho2 = -0.99 + 1.98 * rng.u01();
        GlobalParams gg;
        gg.rho3 = -1.0 + 2.0 * rng.u01();
        gg.w1 = -1.0 + 2.0 * rng.u01();
        gg.b1 = -1.0 + 2.0 * rng.u01();
        CHECK(rho_admissible(cc, gg, compute_rho(cc, gg)));
    }

    // w1 = b1 = 1 collapses to the product exactly
    for (int trial = 0; trial < 1000; ++trial) {
        CounterRng rng(derive_key(key + 1, trial));
        CoeffVector cc = mk(1 + rng.u01(), 1, 0.5, 0, -0.9 + 1.8 * rng.u01(),
                            -0.9 + 1.8 * rng.u01());
        GlobalParams gg;
        gg.rho3 = -1.0 + 2.0 * rng.u01();
        gg.w1 = 1.0;
        gg.b1 = 1.0;
        CHECK(compute_rho(cc, gg) ==
              doctest::Approx(cc.xi * gg.rho3 * cc.rho1 * cc.rho2).epsilon(1e-15));
    }
}

TEST_CASE("h function kinds") {
    GlobalParams g;
    g.h = HFunction::sqrt();
    CHECK(h_eval(g, 4.0) == doctest::Approx(2.0));
    g.h = HFunction::identity();
    CHECK(h_eval(g, 0.0) == doctest::Approx(0.0));
    g.h = HFunction::tabulated({{0.0, 0.0}, {1.0, 2.0}});
    CHECK(h_eval(g, 0.5) == doctest::Approx(1.0));
    // flat extrapolation
    CHECK(h_eval(g, 5.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(h_eval(g, -0.1), ValidationError);
    CHECK_THROWS_AS(HFunction::tabulated({{0.0, -1.0}, {1.0, 0.0}}), ValidationError);
}

TEST_CASE("coeff distribution sampling honors invariants") {
    CoeffDistribution d;
    d.k = FieldSampler::uniform(0.5, 3.0);
    d.theta = FieldSampler::lognormal(std::log(0.09), 0.2);
    d.xi = FieldSampler::uniform(0.05, 0.6);
    d.r = FieldSampler::point(0.03);
    d.rho1 = FieldSampler::uniform(-0.9, 0.9);
    d.rho2 = FieldSampler::uniform(-0.9, 0.9);
    d.strict = true;

    CounterRng rng(12345);
    for (int i = 0; i < 10000; ++i) {
        const CoeffVector c = d.sample(rng);
        CHECK_NOTHROW(c.validate(true));
        CHECK(c.r == 0.03);  // point-mass field reproduced exactly
    }
}

TEST_CASE("impossible distribution hits the attempt cap") {
    CoeffDistribution d = CoeffDistribution::point_mass(mk(1, 0.4, 1));  // violated
    d.strict = true;
    CounterRng rng(1);
    CHECK_THROWS_AS(d.sample(rng), ValidationError);
}
