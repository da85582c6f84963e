#pragma once

#include "mpcguard/attack.hpp"
#include "mpcguard/detector.hpp"
#include "mpcguard/dynamics.hpp"
#include "mpcguard/nmpc.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mpcguard {

/// Controller settings for the coupled-tanks plant, before derived quantities
/// (box sets, DARE terminal weight) are filled in.
struct TankMpcSettings {
    int horizon = 10;
    Vector q_diag = Vector::Constant(2, 1.0);
    Vector r_diag = Vector::Constant(1, 0.0005);
    State setpoint = State::Constant(2, 0.8);
    double terminal_radius = 0.0;
    // Overrides the DARE terminal weight when set.
    std::optional<Vector> terminal_weight_diag;
    bool proximity_enabled = true;
    double proximity_radius = 0.01;
    Norm proximity_norm = Norm::euclidean;
    SolverOptions solver;
};

MpcConfig make_tank_mpc_config(const CoupledTanks& model, const TankMpcSettings& settings);

struct DetectorSettings {
    bool enabled = true;
    double delta = 0.01;
    double gamma = 0.1;
    Norm norm = Norm::euclidean;
};

struct NoiseModel {
    enum class Kind { none, gaussian };
    Kind kind = Kind::none;
    double std_dev = 0.0;
    std::uint64_t seed = 0;
};

struct ScenarioConfig {
    TankParams plant;
    State x0 = State::Zero(2);
    TankMpcSettings mpc;
    DetectorSettings detector;
    AttackSchedule attack;
    NoiseModel noise;
    TimeIndex total_steps = 1000;
    bool halt_on_alarm = true;

    /// Throws std::invalid_argument naming the first broken invariant.
    void validate() const;
};

/// One closed-loop step. `status` is empty on the step where the loop halted
/// on an alarm (no solve, no input applied).
struct StepRecord {
    TimeIndex k = 0;
    double t = 0.0;
    State x_true;
    State y_measured;
    State ytilde;
    ControlInput u_applied;
    ControlInput u_attack;
    State y_attack;
    double residual = 0.0;
    double cusum = 0.0;
    bool alarm = false;
    std::optional<SolveStatus> status;
    double cost = 0.0;
    double violation = 0.0;
    int outer_iterations = 0;
    std::vector<double> violation_history;
};

enum class DelayOutcome { none, detected, false_positive };

struct DetectionDelay {
    DelayOutcome outcome = DelayOutcome::none;
    // alarm_step - attack_start; negative for false positives.
    TimeIndex steps = 0;
};

struct RunSummary {
    std::vector<TimeIndex> alarm_steps;
    TimeIndex attack_start = -1;  // -1 when the schedule is empty
    DetectionDelay delay;
    State max_state;
    State final_state;
    std::string halted_reason;  // "completed" or "alarm"
};

struct RunLog {
    double sample_time = 0.1;
    std::vector<StepRecord> records;
    RunSummary summary;

    std::optional<TimeIndex> first_alarm() const;
};

/// Closed-loop control and anomaly detection. Per step k: measure
/// y_k = x_k + y^a_k + noise, update the CUSUM with ||y_k - ytilde_k||, halt on
/// alarm if requested, solve from the (box-clamped) measurement with proximity
/// to ytilde_{k+1..k+N-1}, publish ytilde_{k+N}, and apply
/// clamp(u*_0 + u^a_k) to the plant. Deterministic for a fixed seed.
RunLog run(const ScenarioConfig& scenario);

/// First alarm relative to the attack onset. An alarm before the onset (or
/// any alarm when there is no attack, attack_start < 0) is a false positive.
DetectionDelay detection_delay(const RunLog& log, TimeIndex attack_start);

}  // namespace mpcguard
