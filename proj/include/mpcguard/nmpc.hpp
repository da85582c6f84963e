#pragma once

#include "mpcguard/dynamics.hpp"
#include "mpcguard/types.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mpcguard {

/// Ball of admissible deviation around each reference point.
struct ProximityBall {
    double radius = 0.01;
    Norm norm = Norm::euclidean;
};

struct ProximityCheck {
    bool inside = true;
    double residual = 0.0;
};

/// residual = ||y - ytilde||; inside iff residual < radius (strict).
ProximityCheck check_proximity(const State& y, const State& ytilde, const ProximityBall& ball);

struct SolverOptions {
    double stationarity_tol = 1e-8;
    double feasibility_tol = 1e-6;
    int max_outer_iterations = 30;
    int max_inner_iterations = 500;
    double initial_step = 1.0;
    double backtrack_factor = 0.5;
    double armijo_c1 = 1e-4;
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double max_penalty = 1e8;
    // Relative violation decrease below which a capped-penalty pass counts as stalled.
    double stagnation_ratio = 0.01;
    // Inequalities are tightened by this much inside the optimizer, so a point
    // accepted at feasibility_tol still satisfies the original constraints
    // (including the strict "< radius" proximity test).
    double constraint_margin = 1e-5;
};

struct MpcConfig {
    int horizon = 10;
    Matrix Q;                        // n x n, positive definite
    Matrix R;                        // m x m, positive definite
    Matrix P;                        // n x n terminal weight, positive semidefinite
    State setpoint;
    double terminal_set_radius = 0.0;  // 0 disables the terminal ball
    std::optional<ProximityBall> proximity;
    BoxSet state_box;
    BoxSet input_box;
    SolverOptions solver;

    /// Throws std::invalid_argument describing the first broken invariant.
    void validate() const;
};

enum class SolveStatus { converged, max_iterations, infeasible_relaxed };

std::string_view to_string(SolveStatus status);

struct SolveResult {
    std::vector<ControlInput> controls;       // u*_{0|k} ... u*_{N-1|k}
    std::vector<State> predicted_outputs;     // y*_{1|k} ... y*_{N|k}
    double cost = 0.0;
    SolveStatus status = SolveStatus::converged;
    double constraint_violation = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    // Max constraint violation after each outer (multiplier) iteration.
    std::vector<double> violation_history;
};

/// States x_1 ... x_N reached from x0 under `controls`.
std::vector<State> rollout(const PlantModel& model, const State& x0,
                           std::span<const ControlInput> controls);

/// Tracking cost of a predicted trajectory:
///   sum_{j=1..N} (y_j - s)' Q (y_j - s) + sum_{j=0..N-1} u_j' R u_j + (y_N - s)' P (y_N - s)
double evaluate_cost(const MpcConfig& cfg, std::span<const State> predicted,
                     std::span<const ControlInput> controls);

/// Same as above plus the constant stage-0 term (y_0 - s)' Q (y_0 - s) of the
/// measured output.
double evaluate_cost(const MpcConfig& cfg, const State& measured, std::span<const State> predicted,
                     std::span<const ControlInput> controls);

/// Gradient of evaluate_cost(rollout(x0, controls)) w.r.t. the stacked controls
/// (length N*m), by reverse-mode chain rule through the model Jacobians.
Vector cost_gradient(const MpcConfig& cfg, const PlantModel& model, const State& x0,
                     std::span<const ControlInput> controls);

/// Receding-horizon warm start: drop the first move, repeat the last one.
std::vector<ControlInput> shift_controls(std::span<const ControlInput> previous);

/// Solves the finite-horizon problem from x0.
///
/// Inputs are kept in the input box by projection. The state box, the
/// terminal ball and, when `cfg.proximity` is set, the proximity balls around
/// `reference[j-1]` for stages j = 1..reference.size() are handled by an
/// augmented Lagrangian. `reference` may be shorter than the horizon; the
/// remaining stages carry no proximity constraint. `warm_start`, when given, is
/// the previous step's result and is shifted one step before use.
///
/// Never throws on non-convergence; see SolveResult::status.
SolveResult solve(const MpcConfig& cfg, const PlantModel& model, const State& x0,
                  std::span<const State> reference = {}, const SolveResult* warm_start = nullptr);

/// Stabilizing solution of the discrete algebraic Riccati equation
/// P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q.
Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

/// Terminal weight from the DARE of the model linearized at (setpoint, u_eq).
Matrix terminal_weight_from_dare(const PlantModel& model, const State& setpoint,
                                 const ControlInput& equilibrium_input, const Matrix& Q,
                                 const Matrix& R);

}  // namespace mpcguard
