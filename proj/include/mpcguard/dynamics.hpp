#pragma once

#include "mpcguard/types.hpp"

namespace mpcguard {

/// Local linearization of the discrete dynamics: x+ ~ A x + B u.
struct Linearization {
    Matrix A;
    Matrix B;
};

/// Discrete-time plant x_{k+1} = f(x_k, u_k) with box-bounded states and inputs.
///
/// Implementations must be pure: the same (x, u) always yields the same
/// successor, and concurrent calls are safe.
class PlantModel {
public:
    virtual ~PlantModel() = default;

    virtual std::size_t state_dim() const = 0;
    virtual std::size_t input_dim() const = 0;

    virtual State step(const State& x, const ControlInput& u) const = 0;
    virtual Linearization jacobians(const State& x, const ControlInput& u) const = 0;

    virtual const BoxSet& state_box() const = 0;
    virtual const BoxSet& input_box() const = 0;
};

struct TankParams {
    double alpha1 = 1.75;
    double alpha2 = 0.1544;
    double sample_time = 0.1;

    /// Throws std::invalid_argument unless all three are finite and positive.
    void validate() const;
};

namespace tanks {

// Lower bound used for the square-root derivative near an empty tank.
inline constexpr double kSqrtDerivativeFloor = 1e-9;

/// Forward-Euler coupled tanks:
///   h1+ = h1 + T (a1 u - a2 sqrt(h1))
///   h2+ = h2 + T a2 (sqrt(h1) - sqrt(h2))
/// sqrt arguments are clamped at 0 and the result is clamped to >= 0.
State step(const State& x, const ControlInput& u, const TankParams& p);

Linearization jacobians(const State& x, const ControlInput& u, const TankParams& p);

/// Continuous-time level rates in the alpha parameterization.
Vector continuous_rhs(const State& x, const ControlInput& u, const TankParams& p);

/// Pump rate that holds both tanks at `level`.
double equilibrium_input(const TankParams& p, double level);

}  // namespace tanks

/// Coupled-tanks instance of PlantModel with 0 <= h <= 1 and 0 <= u <= 1.
class CoupledTanks final : public PlantModel {
public:
    explicit CoupledTanks(TankParams params = {});

    std::size_t state_dim() const override { return 2; }
    std::size_t input_dim() const override { return 1; }

    State step(const State& x, const ControlInput& u) const override;
    Linearization jacobians(const State& x, const ControlInput& u) const override;

    const BoxSet& state_box() const override { return state_box_; }
    const BoxSet& input_box() const override { return input_box_; }

    const TankParams& params() const { return params_; }

private:
    TankParams params_;
    BoxSet state_box_;
    BoxSet input_box_;
};

}  // namespace mpcguard
