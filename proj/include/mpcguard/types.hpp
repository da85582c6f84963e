#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>

namespace mpcguard {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Plant state x_k (tank levels for the coupled-tanks model).
using State = Eigen::VectorXd;
// Actuator command u_k (pump rate fraction for the coupled-tanks model).
using ControlInput = Eigen::VectorXd;

using TimeIndex = std::int64_t;

enum class Norm { euclidean, infinity };

/// Distance of `v` in the selected norm.
double norm_of(const Vector& v, Norm norm);

std::string_view to_string(Norm norm);
Norm norm_from_string(std::string_view name);

/// Axis-aligned box {x : lower <= x <= upper}.
struct BoxSet {
    Vector lower;
    Vector upper;

    BoxSet() = default;
    BoxSet(Vector lo, Vector hi);

    std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
    bool contains(const Vector& v, double tol = 0.0) const;
    Vector project(const Vector& v) const;
    /// Largest amount by which `v` leaves the box (0 when inside).
    double violation(const Vector& v) const;
};

bool all_finite(const Vector& v);

}  // namespace mpcguard
