#include "mpcguard/sim.hpp"

#include "mpcguard/reference.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace mpcguard {

MpcConfig make_tank_mpc_config(const CoupledTanks& model, const TankMpcSettings& settings) {
    if (settings.q_diag.size() != 2) throw std::invalid_argument("mpc.q_diag needs 2 entries");
    if (settings.r_diag.size() != 1) throw std::invalid_argument("mpc.r_diag needs 1 entry");
    if (settings.setpoint.size() != 2) throw std::invalid_argument("mpc.setpoint needs 2 entries");

    MpcConfig cfg;
    cfg.horizon = settings.horizon;
    cfg.Q = settings.q_diag.asDiagonal();
    cfg.R = settings.r_diag.asDiagonal();
    cfg.setpoint = settings.setpoint;
    cfg.terminal_set_radius = settings.terminal_radius;
    cfg.state_box = model.state_box();
    cfg.input_box = model.input_box();
    cfg.solver = settings.solver;
    if (settings.proximity_enabled) cfg.proximity = ProximityBall{settings.proximity_radius, settings.proximity_norm};

    if (settings.terminal_weight_diag) {
        if (settings.terminal_weight_diag->size() != 2) {
            throw std::invalid_argument("mpc.terminal_weight_diag needs 2 entries");
        }
        cfg.P = settings.terminal_weight_diag->asDiagonal();
    } else {
        if ((cfg.Q.diagonal().array() <= 0.0).any() || (cfg.R.diagonal().array() <= 0.0).any()) {
            throw std::invalid_argument("mpc.q_diag and mpc.r_diag must be positive");
        }
        // Equilibrium of the tanks at the tank-2 target level.
        const double level = settings.setpoint[1];
        ControlInput u_eq(1);
        u_eq[0] = tanks::equilibrium_input(model.params(), level);
        cfg.P = terminal_weight_from_dare(model, State::Constant(2, level), u_eq, cfg.Q, cfg.R);
    }
    cfg.validate();
    return cfg;
}

void ScenarioConfig::validate() const {
    plant.validate();
    const CoupledTanks model(plant);
    if (total_steps < 1) throw std::invalid_argument("sim.total_steps must be at least 1");
    if (x0.size() != 2 || !all_finite(x0)) throw std::invalid_argument("sim.x0 needs 2 finite entries");
    if (!model.state_box().contains(x0)) throw std::invalid_argument("sim.x0 lies outside the state box [0, 1]^2");
    make_tank_mpc_config(model, mpc);
    if (detector.enabled) make_cusum(detector.delta, detector.gamma);
    if (noise.kind == NoiseModel::Kind::gaussian && !(noise.std_dev >= 0.0 && std::isfinite(noise.std_dev))) {
        throw std::invalid_argument("noise.std_dev must be nonnegative");
    }
    const AttackValidation report = mpcguard::validate(attack);
    if (!report.ok) throw std::invalid_argument(report.messages.front());
    for (const auto& s : attack.segments) {
        const std::size_t dim = s.channel == Channel::input ? model.input_dim() : model.state_dim();
        if (s.target_index >= dim) {
            throw std::invalid_argument("attack segment index " + std::to_string(s.target_index) +
                                        " out of range for the " + std::string(to_string(s.channel)) + " channel");
        }
    }
}

std::optional<TimeIndex> RunLog::first_alarm() const {
    if (summary.alarm_steps.empty()) return std::nullopt;
    return summary.alarm_steps.front();
}

RunLog run(const ScenarioConfig& scenario) {
    scenario.validate();
    const CoupledTanks model(scenario.plant);
    const MpcConfig cfg = make_tank_mpc_config(model, scenario.mpc);
    const BoxSet& state_box = model.state_box();
    const BoxSet& input_box = model.input_box();
    const auto n = model.state_dim();
    const auto m = model.input_dim();

    std::mt19937_64 rng(scenario.noise.seed);
    std::normal_distribution<double> gaussian(0.0, 1.0);
    const bool noisy = scenario.noise.kind == NoiseModel::Kind::gaussian && scenario.noise.std_dev > 0.0;

    CusumState cusum = scenario.detector.enabled ? make_cusum(scenario.detector.delta, scenario.detector.gamma)
                                                 : CusumState{};

    RunLog log;
    log.sample_time = scenario.plant.sample_time;
    log.records.reserve(static_cast<std::size_t>(scenario.total_steps));
    log.summary.attack_start = scenario.attack.first_start();
    log.summary.halted_reason = "completed";

    State x = scenario.x0;
    State max_state = x;
    std::optional<ReferenceBuffer> reference;
    SolveResult previous;

    for (TimeIndex k = 0; k < scenario.total_steps; ++k) {
        StepRecord rec;
        rec.k = k;
        rec.t = static_cast<double>(k) * scenario.plant.sample_time;
        rec.x_true = x;
        rec.y_attack = signal_at(scenario.attack, k, Channel::output, n);
        State noise = State::Zero(static_cast<Eigen::Index>(n));
        if (noisy) {
            for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = scenario.noise.std_dev * gaussian(rng);
        }
        rec.y_measured = x + rec.y_attack + noise;
        const State y_feedback = state_box.project(rec.y_measured);

        if (!reference) {
            reference = ReferenceBuffer::init(model, cfg, y_feedback);
            previous = reference->seed();
        }
        rec.ytilde = reference->get(k);
        const Residual r = residual(rec.y_measured, rec.ytilde, scenario.detector.norm, k);
        rec.residual = r.value;
        if (scenario.detector.enabled) {
            cusum = cusum_update(cusum, r);
            rec.cusum = cusum.last_value;
            rec.alarm = cusum.alarm_step == k;
            if (rec.alarm) log.summary.alarm_steps.push_back(k);
        }

        rec.u_attack = signal_at(scenario.attack, k, Channel::input, m);
        if (rec.alarm && scenario.halt_on_alarm) {
            rec.u_applied = ControlInput::Zero(static_cast<Eigen::Index>(m));
            log.records.push_back(std::move(rec));
            log.summary.halted_reason = "alarm";
            break;
        }

        const std::vector<State> centers =
            cfg.proximity ? reference->window(k, cfg.horizon - 1) : std::vector<State>{};
        SolveResult result = solve(cfg, model, y_feedback, centers, &previous);
        reference->push(k, state_box.project(result.predicted_outputs.back()));

        rec.u_applied = input_box.project(result.controls.front() + rec.u_attack);
        rec.status = result.status;
        rec.cost = result.cost;
        rec.violation = result.constraint_violation;
        rec.outer_iterations = result.outer_iterations;
        rec.violation_history = result.violation_history;

        x = model.step(x, rec.u_applied);
        max_state = max_state.cwiseMax(x);
        log.records.push_back(std::move(rec));
        previous = std::move(result);
    }

    log.summary.max_state = max_state;
    log.summary.final_state = x;
    log.summary.delay = detection_delay(log, log.summary.attack_start);
    return log;
}

DetectionDelay detection_delay(const RunLog& log, TimeIndex attack_start) {
    const auto first = log.first_alarm();
    if (!first) return {};
    if (attack_start < 0 || *first < attack_start) {
        return {DelayOutcome::false_positive, attack_start < 0 ? 0 : *first - attack_start};
    }
    return {DelayOutcome::detected, *first - attack_start};
}

}  // namespace mpcguard
