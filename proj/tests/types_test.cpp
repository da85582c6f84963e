#include "mpcguard/types.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

using namespace mpcguard;

TEST_CASE("box membership, projection and violation") {
    const BoxSet box(Vector::Zero(2), Vector::Ones(2));
    CHECK(box.contains(Vector::Constant(2, 0.5)));
    CHECK(box.contains(Vector::Ones(2)));
    CHECK_FALSE(box.contains(Vector::Constant(2, 1.1)));
    CHECK(box.contains(Vector::Constant(2, 1.0 + 1e-9), 1e-8));

    Vector v(2);
    v << -0.2, 1.7;
    const Vector p = box.project(v);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 1.0);
    CHECK(box.violation(v) == doctest::Approx(0.7));
    CHECK(box.violation(p) == 0.0);
}

TEST_CASE("box rejects inverted or non-finite bounds") {
    CHECK_THROWS_AS(BoxSet(Vector::Ones(2), Vector::Zero(2)), std::invalid_argument);
    Vector hi = Vector::Ones(2);
    hi[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(BoxSet(Vector::Zero(2), hi), std::invalid_argument);
    CHECK_THROWS_AS(BoxSet(Vector::Zero(2), Vector::Ones(3)), std::invalid_argument);
}

TEST_CASE("norms and names") {
    Vector d(2);
    d << 0.03, -0.04;
    CHECK(norm_of(d, Norm::euclidean) == doctest::Approx(0.05));
    CHECK(norm_of(d, Norm::infinity) == doctest::Approx(0.04));
    CHECK(norm_from_string("l2") == Norm::euclidean);
    CHECK(norm_from_string("linf") == Norm::infinity);
    CHECK(to_string(Norm::euclidean) == "l2");
    CHECK_THROWS_AS(norm_from_string("l1"), std::invalid_argument);
}

TEST_CASE("all_finite") {
    Vector v = Vector::Zero(3);
    CHECK(all_finite(v));
    v[1] = std::nan("");
    CHECK_FALSE(all_finite(v));
}
