#include "mpcguard/dynamics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace mpcguard;

namespace {

State levels(double h1, double h2) {
    State x(2);
    x << h1, h2;
    return x;
}

ControlInput input(double u) { return ControlInput::Constant(1, u); }

}  // namespace

TEST_CASE("empty tanks with the pump off stay empty") {
    const CoupledTanks model;
    const State next = model.step(levels(0, 0), input(0));
    CHECK(next[0] == 0.0);
    CHECK(next[1] == 0.0);
}

TEST_CASE("equal levels drain only the upper tank") {
    const CoupledTanks model;
    const State next = model.step(levels(0.25, 0.25), input(0));
    CHECK(next[0] == doctest::Approx(0.24228).epsilon(1e-12));
    CHECK(next[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("equilibrium input holds the 0.8 level") {
    const CoupledTanks model;
    const double u = tanks::equilibrium_input(model.params(), 0.8);
    CHECK(u == doctest::Approx(0.078918).epsilon(1e-5));
    const State next = model.step(levels(0.8, 0.8), input(u));
    CHECK(std::abs(next[0] - 0.8) < 1e-12);
    CHECK(std::abs(next[1] - 0.8) < 1e-12);
}

TEST_CASE("any level in (0,1] is a fixed point under its equilibrium input") {
    const CoupledTanks model;
    for (double h = 0.01; h <= 1.0; h += 0.01) {
        const State next = model.step(levels(h, h), input(tanks::equilibrium_input(model.params(), h)));
        CHECK(std::abs(next[0] - h) < 1e-14);
        CHECK(std::abs(next[1] - h) < 1e-14);
    }
}

TEST_CASE("step agrees with the straight-line oracle") {
    const CoupledTanks model;
    const oracle::Tanks ref;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> level(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double h1 = level(rng), h2 = level(rng), u = level(rng);
        const State got = model.step(levels(h1, h2), input(u));
        const oracle::Levels want = ref.step({h1, h2}, u);
        CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-14));
        CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-14));
    }
}

TEST_CASE("step clamps the successor at zero") {
    const CoupledTanks model;
    // A tiny upper level drains past zero in one Euler step.
    const State next = model.step(levels(1e-6, 0.5), input(0));
    CHECK(next[0] == 0.0);
    CHECK(next[1] >= 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> level(0.0, 0.01);
    for (int i = 0; i < 1000; ++i) {
        const State x = model.step(levels(level(rng), level(rng)), input(0));
        CHECK(x.minCoeff() >= 0.0);
    }
}

TEST_CASE("upper tank is strictly increasing in the pump input") {
    const CoupledTanks model;
    const State x = levels(0.4, 0.6);
    double previous = -1.0;
    for (double u = 0.0; u <= 1.0; u += 0.05) {
        const double h1 = model.step(x, input(u))[0];
        CHECK(h1 > previous);
        previous = h1;
    }
}

TEST_CASE("step rejects non-finite or mis-sized arguments") {
    const CoupledTanks model;
    CHECK_THROWS_AS(model.step(levels(std::nan(""), 0.2), input(0.1)), std::invalid_argument);
    CHECK_THROWS_AS(model.step(levels(0.2, 0.2), input(std::numeric_limits<double>::infinity())),
                    std::invalid_argument);
    CHECK_THROWS_AS(model.step(State::Zero(3), input(0.1)), std::invalid_argument);
}

TEST_CASE("hand-derived jacobian entries at equal levels") {
    const CoupledTanks model;
    const Linearization lin = model.jacobians(levels(0.25, 0.25), input(0));
    CHECK(lin.A(0, 0) == doctest::Approx(0.98456).epsilon(1e-12));
    CHECK(lin.B(0, 0) == doctest::Approx(0.175).epsilon(1e-12));
    CHECK(lin.B(1, 0) == 0.0);
    CHECK(lin.A(0, 1) == 0.0);
}

TEST_CASE("jacobians match central differences at random interior points") {
    const CoupledTanks model;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> level(0.05, 0.95);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const State x = levels(level(rng), level(rng));
        const ControlInput u = input(level(rng));
        const Linearization lin = model.jacobians(x, u);
        for (int j = 0; j < 2; ++j) {
            State xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const State col = (model.step(xp, u) - model.step(xm, u)) / (2 * h);
            for (int i = 0; i < 2; ++i) {
                const double scale = std::max(1.0, std::abs(col[i]));
                CHECK(std::abs(lin.A(i, j) - col[i]) / scale < 1e-5);
            }
        }
        const State bcol = (model.step(x, input(u[0] + h)) - model.step(x, input(u[0] - h))) / (2 * h);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(lin.B(i, 0) - bcol[i]) / std::max(1.0, std::abs(bcol[i])) < 1e-5);
    }
}

TEST_CASE("jacobians stay finite on empty tanks") {
    const CoupledTanks model;
    const Linearization lin = model.jacobians(levels(0, 0), input(0));
    CHECK(lin.A.allFinite());
    CHECK(lin.B.allFinite());
}

TEST_CASE("continuous rates match the Euler increment") {
    const TankParams p;
    const State x = levels(0.5, 0.3);
    const ControlInput u = input(0.1);
    const State diff = tanks::step(x, u, p) - x;
    const Vector rate = tanks::continuous_rhs(x, u, p);
    CHECK(diff[0] == doctest::Approx(p.sample_time * rate[0]).epsilon(1e-12));
    CHECK(diff[1] == doctest::Approx(p.sample_time * rate[1]).epsilon(1e-12));

    const Vector zero = tanks::continuous_rhs(levels(0, 0), input(0), p);
    CHECK(zero.isZero());
    const Vector drain = tanks::continuous_rhs(levels(0.25, 0.25), input(0), p);
    CHECK(drain[0] == doctest::Approx(-0.0772).epsilon(1e-12));
    CHECK(drain[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tank parameters must be positive") {
    TankParams p;
    p.alpha2 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = TankParams{};
    p.sample_time = -0.1;
    CHECK_THROWS_AS(CoupledTanks{p}, std::invalid_argument);
}
