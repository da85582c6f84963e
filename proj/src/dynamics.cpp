#include "mpcguard/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace mpcguard {

void TankParams::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(alpha1)) throw std::invalid_argument("plant.alpha1 must be positive");
    if (!positive(alpha2)) throw std::invalid_argument("plant.alpha2 must be positive");
    if (!positive(sample_time)) throw std::invalid_argument("plant.sample_time must be positive");
}

namespace tanks {
namespace {

void check_arguments(const State& x, const ControlInput& u) {
    if (x.size() != 2) throw std::invalid_argument("coupled tanks state must have 2 entries");
    if (u.size() != 1) throw std::invalid_argument("coupled tanks input must have 1 entry");
    if (!all_finite(x) || !all_finite(u)) throw std::invalid_argument("non-finite state or input");
}

double safe_sqrt(double h) { return std::sqrt(std::max(h, 0.0)); }

double sqrt_slope(double h) { return 0.5 / std::sqrt(std::max(h, kSqrtDerivativeFloor)); }

}  // namespace

Vector continuous_rhs(const State& x, const ControlInput& u, const TankParams& p) {
    check_arguments(x, u);
    const double s1 = safe_sqrt(x[0]);
    const double s2 = safe_sqrt(x[1]);
    Vector rate(2);
    rate[0] = p.alpha1 * u[0] - p.alpha2 * s1;
    rate[1] = p.alpha2 * (s1 - s2);
    return rate;
}

State step(const State& x, const ControlInput& u, const TankParams& p) {
    State next = x + p.sample_time * continuous_rhs(x, u, p);
    return next.cwiseMax(0.0);
}

Linearization jacobians(const State& x, const ControlInput& u, const TankParams& p) {
    check_arguments(x, u);
    const double T = p.sample_time;
    const double d1 = sqrt_slope(x[0]);
    const double d2 = sqrt_slope(x[1]);

    Linearization lin{Matrix::Zero(2, 2), Matrix::Zero(2, 1)};
    lin.A(0, 0) = 1.0 - T * p.alpha2 * d1;
    lin.A(1, 0) = T * p.alpha2 * d1;
    lin.A(1, 1) = 1.0 - T * p.alpha2 * d2;
    lin.B(0, 0) = T * p.alpha1;
    return lin;
}

double equilibrium_input(const TankParams& p, double level) {
    return p.alpha2 / p.alpha1 * std::sqrt(std::max(level, 0.0));
}

}  // namespace tanks

CoupledTanks::CoupledTanks(TankParams params)
    : params_(params),
      state_box_(Vector::Zero(2), Vector::Ones(2)),
      input_box_(Vector::Zero(1), Vector::Ones(1)) {
    params_.validate();
}

State CoupledTanks::step(const State& x, const ControlInput& u) const {
    return tanks::step(x, u, params_);
}

Linearization CoupledTanks::jacobians(const State& x, const ControlInput& u) const {
    return tanks::jacobians(x, u, params_);
}

}  // namespace mpcguard
