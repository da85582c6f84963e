#include "mpcguard/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpcguard {

namespace {

bool is_symmetric(const Matrix& M) {
    return M.rows() == M.cols() && (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + M.cwiseAbs().maxCoeff());
}

bool is_positive_definite(const Matrix& M) {
    if (M.size() == 0 || !is_symmetric(M)) return false;
    Eigen::LLT<Matrix> llt(M);
    return llt.info() == Eigen::Success;
}

bool is_positive_semidefinite(const Matrix& M) {
    if (M.size() == 0 || !is_symmetric(M)) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= -1e-10 * (1.0 + M.cwiseAbs().maxCoeff());
}

double quad(const Matrix& W, const Vector& v) { return v.dot(W * v); }

// Flat decision vector <-> per-stage controls.
Vector stack(std::span<const ControlInput> controls, Eigen::Index m) {
    Vector flat(static_cast<Eigen::Index>(controls.size()) * m);
    for (std::size_t j = 0; j < controls.size(); ++j) {
        flat.segment(static_cast<Eigen::Index>(j) * m, m) = controls[j];
    }
    return flat;
}

std::vector<ControlInput> unstack(const Vector& flat, Eigen::Index m) {
    std::vector<ControlInput> controls(static_cast<std::size_t>(flat.size() / m));
    for (std::size_t j = 0; j < controls.size(); ++j) {
        controls[j] = flat.segment(static_cast<Eigen::Index>(j) * m, m);
    }
    return controls;
}

// One scalar constraint g(y_j) <= 0 of a stage. Linear terms have gradient
// sign * e_index; ball terms g = (|d|^2 - r^2) / 2r have gradient d / r and
// Hessian I / r.
struct ConstraintTerm {
    double g = 0.0;
    double natural = 0.0;  // violation in the constraint's own units
    Eigen::Index index = -1;
    double sign = 0.0;
    const Vector* offset = nullptr;
    double radius = 1.0;

    bool is_ball() const { return offset != nullptr; }

    void add_gradient(Vector& dy, double w) const {
        if (is_ball()) {
            dy += (w / radius) * *offset;
        } else {
            dy[index] += w * sign;
        }
    }

    // Gauss-Newton curvature of (1/2rho) max(0, lambda + rho g)^2 in y.
    void add_curvature(Matrix& hy, double rho, double shifted) const {
        if (is_ball()) {
            const Vector a = *offset / radius;
            hy.noalias() += rho * a * a.transpose();
            hy.diagonal().array() += shifted / radius;
        } else {
            hy(index, index) += rho;
        }
    }
};

// Single-shooting problem with augmented-Lagrangian handling of the state-space
// constraints. Constraints are visited in a fixed order so the multiplier
// vector lines up across evaluations.
class ShootingProblem {
public:
    ShootingProblem(const MpcConfig& cfg, const PlantModel& model, const State& x0,
                    std::span<const State> centers, bool constrained = true)
        : cfg_(cfg),
          model_(model),
          x0_(x0),
          centers_(centers),
          n_(static_cast<Eigen::Index>(model.state_dim())),
          m_(static_cast<Eigen::Index>(model.input_dim())),
          horizon_(cfg.horizon),
          constrained_(constrained) {
        margin_ = std::max(0.0, cfg_.solver.constraint_margin);
        for (int j = 1; j <= horizon_; ++j) constraint_count_ += constraints_at_stage(j);
    }

    Eigen::Index input_dim() const { return m_; }
    Eigen::Index variable_count() const { return static_cast<Eigen::Index>(horizon_) * m_; }
    std::size_t constraint_count() const { return constraint_count_; }

    // Augmented Lagrangian merit
    //   J(u) + sum_i [max(0, lambda_i + rho g_i)^2 - lambda_i^2] / 2rho.
    // `grad` receives the exact gradient, `hess` a Gauss-Newton Hessian.
    double merit(const Vector& flat_u, const Vector& lambda, double rho, Vector* grad = nullptr,
                 Matrix* hess = nullptr) const {
        const auto controls = unstack(flat_u, m_);
        const auto traj = rollout(model_, x0_, controls);
        double value = evaluate_cost(cfg_, traj, controls);
        const bool derivatives = grad || hess;

        std::vector<Vector> dy;
        std::vector<Matrix> hy;
        if (derivatives) {
            dy.resize(static_cast<std::size_t>(horizon_));
            hy.resize(static_cast<std::size_t>(horizon_));
            for (int j = 1; j <= horizon_; ++j) {
                dy[j - 1] = 2.0 * cfg_.Q * (traj[j - 1] - cfg_.setpoint);
                hy[j - 1] = 2.0 * cfg_.Q;
            }
            dy.back() += 2.0 * cfg_.P * (traj.back() - cfg_.setpoint);
            hy.back() += 2.0 * cfg_.P;
        }

        std::size_t idx = 0;
        for (int j = 1; j <= horizon_; ++j) {
            visit_stage(j, traj[j - 1], [&](const ConstraintTerm& c) {
                const double lam = lambda[static_cast<Eigen::Index>(idx++)];
                const double shifted = std::max(0.0, lam + rho * c.g);
                value += (shifted * shifted - lam * lam) / (2.0 * rho);
                if (derivatives && shifted > 0.0) {
                    c.add_gradient(dy[j - 1], shifted);
                    c.add_curvature(hy[j - 1], rho, shifted);
                }
            });
        }
        if (!derivatives) return value;

        std::vector<Linearization> lins;
        lins.reserve(static_cast<std::size_t>(horizon_));
        for (int j = 0; j < horizon_; ++j) {
            lins.push_back(model_.jacobians(j == 0 ? x0_ : traj[j - 1], controls[j]));
        }
        if (grad) *grad = backpropagate(lins, controls, dy);
        if (hess) *hess = gauss_newton(lins, hy);
        return value;
    }

    // Raw constraint values g_i and the max natural-unit violation.
    double constraints(const Vector& flat_u, Vector& g) const {
        const auto traj = rollout(model_, x0_, unstack(flat_u, m_));
        g.resize(static_cast<Eigen::Index>(constraint_count_));
        double worst = 0.0;
        std::size_t idx = 0;
        for (int j = 1; j <= horizon_; ++j) {
            visit_stage(j, traj[j - 1], [&](const ConstraintTerm& c) {
                g[static_cast<Eigen::Index>(idx++)] = c.g;
                worst = std::max(worst, c.natural);
            });
        }
        return worst;
    }

private:
    // Reverse sweep: lambda_N = dL/dy_N, lambda_{j-1} = A_{j-1}' lambda_j + dL/dy_{j-1}.
    Vector backpropagate(const std::vector<Linearization>& lins, const std::vector<ControlInput>& controls,
                         const std::vector<Vector>& dy) const {
        Vector grad(variable_count());
        Vector adjoint = dy.back();
        for (int j = horizon_; j >= 1; --j) {
            const Linearization& lin = lins[j - 1];
            grad.segment(static_cast<Eigen::Index>(j - 1) * m_, m_) =
                lin.B.transpose() * adjoint + 2.0 * cfg_.R * controls[j - 1];
            if (j > 1) adjoint = lin.A.transpose() * adjoint + dy[j - 2];
        }
        return grad;
    }

    // sum_j S_j' H_j S_j + blockdiag(2R), with sensitivities S_j = dy_j/du.
    Matrix gauss_newton(const std::vector<Linearization>& lins, const std::vector<Matrix>& hy) const {
        const Eigen::Index nv = variable_count();
        Matrix H = Matrix::Zero(nv, nv);
        Matrix S = Matrix::Zero(n_, nv);
        for (int j = 1; j <= horizon_; ++j) {
            const Linearization& lin = lins[j - 1];
            S = lin.A * S;
            S.middleCols(static_cast<Eigen::Index>(j - 1) * m_, m_) += lin.B;
            H.noalias() += S.transpose() * hy[j - 1] * S;
            H.block(static_cast<Eigen::Index>(j - 1) * m_, static_cast<Eigen::Index>(j - 1) * m_, m_, m_) +=
                2.0 * cfg_.R;
        }
        return H;
    }

    std::size_t constraints_at_stage(int j) const {
        if (!constrained_) return 0;
        std::size_t count = 2 * static_cast<std::size_t>(n_);
        if (has_proximity(j)) count += cfg_.proximity->norm == Norm::euclidean ? 1 : 2 * static_cast<std::size_t>(n_);
        if (j == horizon_ && cfg_.terminal_set_radius > 0.0) count += 1;
        return count;
    }

    bool has_proximity(int j) const {
        return cfg_.proximity.has_value() && static_cast<std::size_t>(j) <= centers_.size();
    }

    // Upper state bounds and balls are tightened by `margin_`. Lower state
    // bounds are not, so a trajectory that starts on one stays feasible.
    template <typename Fn>
    void visit_stage(int j, const State& y, Fn&& fn) const {
        if (!constrained_) return;
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double above = y[i] - cfg_.state_box.upper[i] + margin_;
            linear(above, std::max(0.0, above), i, 1.0, fn);
            const double below = cfg_.state_box.lower[i] - y[i];
            linear(below, std::max(0.0, below), i, -1.0, fn);
        }
        if (has_proximity(j)) {
            const Vector d = y - centers_[static_cast<std::size_t>(j - 1)];
            ball(d, cfg_.proximity->radius, cfg_.proximity->norm, fn);
        }
        if (j == horizon_ && cfg_.terminal_set_radius > 0.0) {
            const Vector d = y - cfg_.setpoint;
            ball(d, cfg_.terminal_set_radius, Norm::euclidean, fn);
        }
    }

    template <typename Fn>
    static void linear(double g, double natural, Eigen::Index i, double sign, Fn&& fn) {
        ConstraintTerm c;
        c.g = g;
        c.natural = natural;
        c.index = i;
        c.sign = sign;
        fn(c);
    }

    template <typename Fn>
    void ball(const Vector& d, double radius, Norm norm, Fn&& fn) const {
        const double tight = std::max(radius - margin_, 0.5 * radius);
        if (norm == Norm::infinity) {
            for (Eigen::Index i = 0; i < d.size(); ++i) {
                linear(d[i] - tight, std::max(0.0, d[i] - tight), i, 1.0, fn);
                linear(-d[i] - tight, std::max(0.0, -d[i] - tight), i, -1.0, fn);
            }
            return;
        }
        ConstraintTerm c;
        c.g = (d.squaredNorm() - tight * tight) / (2.0 * tight);
        c.natural = std::max(0.0, d.norm() - tight);
        c.offset = &d;
        c.radius = tight;
        fn(c);
    }

    const MpcConfig& cfg_;
    const PlantModel& model_;
    const State& x0_;
    std::span<const State> centers_;
    Eigen::Index n_;
    Eigen::Index m_;
    int horizon_;
    bool constrained_;
    double margin_ = 0.0;
    std::size_t constraint_count_ = 0;
};

struct InnerOutcome {
    bool stationary = false;
    int iterations = 0;
};

Vector project_flat(const Vector& flat, const BoxSet& box) {
    Vector out = flat;
    const Eigen::Index m = static_cast<Eigen::Index>(box.dim());
    for (Eigen::Index s = 0; s < flat.size(); s += m) {
        out.segment(s, m) = box.project(flat.segment(s, m));
    }
    return out;
}

double stationarity(const Vector& u, const Vector& grad, const BoxSet& box) {
    return (project_flat(u - grad, box) - u).cwiseAbs().maxCoeff();
}

// Projected Newton (Bertsekas) with Armijo backtracking along the projection
// arc. Variables within eps of a bound whose gradient pushes outward are held
// on a plain gradient step; the rest take a Newton step on the Gauss-Newton
// Hessian. Falls back to a projected gradient step when the arc search fails.
InnerOutcome minimize_projected(const ShootingProblem& problem, const MpcConfig& cfg, Vector& u,
                                const Vector& lambda, double rho) {
    const SolverOptions& opt = cfg.solver;
    const Eigen::Index nv = u.size();
    const Eigen::Index m = static_cast<Eigen::Index>(cfg.input_box.dim());
    InnerOutcome outcome;
    Vector grad;
    Matrix hess;
    double value = problem.merit(u, lambda, rho, &grad, &hess);

    auto arc_search = [&](const Vector& direction, Vector& accepted, double& accepted_value) {
        for (double step = opt.initial_step; step > 1e-14; step *= opt.backtrack_factor) {
            Vector candidate = project_flat(u + step * direction, cfg.input_box);
            const double decrease = grad.dot(candidate - u);
            if (decrease >= 0.0) continue;
            const double candidate_value = problem.merit(candidate, lambda, rho);
            if (candidate_value <= value + opt.armijo_c1 * decrease) {
                accepted = std::move(candidate);
                accepted_value = candidate_value;
                return true;
            }
        }
        return false;
    };

    for (; outcome.iterations < opt.max_inner_iterations; ++outcome.iterations) {
        const double measure = stationarity(u, grad, cfg.input_box);
        if (measure <= opt.stationarity_tol) {
            outcome.stationary = true;
            return outcome;
        }

        const double eps = std::min(1e-3, measure);
        std::vector<Eigen::Index> free;
        Vector direction = -grad;
        for (Eigen::Index i = 0; i < nv; ++i) {
            const Eigen::Index c = i % m;
            const bool at_lower = u[i] <= cfg.input_box.lower[c] + eps && grad[i] > 0.0;
            const bool at_upper = u[i] >= cfg.input_box.upper[c] - eps && grad[i] < 0.0;
            if (!at_lower && !at_upper) free.push_back(i);
        }
        if (!free.empty()) {
            const auto nf = static_cast<Eigen::Index>(free.size());
            Matrix reduced(nf, nf);
            Vector rhs(nf);
            for (Eigen::Index a = 0; a < nf; ++a) {
                rhs[a] = -grad[free[a]];
                for (Eigen::Index b = 0; b < nf; ++b) reduced(a, b) = hess(free[a], free[b]);
            }
            const Eigen::LDLT<Matrix> ldlt(reduced);
            if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                const Vector step = ldlt.solve(rhs);
                for (Eigen::Index a = 0; a < nf; ++a) direction[free[a]] = step[a];
            }
        }

        Vector next;
        double next_value = 0.0;
        if (!arc_search(direction, next, next_value) && !arc_search(-grad, next, next_value)) {
            // No descent left at machine precision.
            outcome.stationary = true;
            return outcome;
        }
        u = std::move(next);
        value = problem.merit(u, lambda, rho, &grad, &hess);
    }
    outcome.stationary = stationarity(u, grad, cfg.input_box) <= opt.stationarity_tol;
    return outcome;
}

void check_sequence_dims(std::span<const State> xs, Eigen::Index n, const char* what) {
    for (const auto& x : xs) {
        if (x.size() != n) throw std::invalid_argument(std::string(what) + " has wrong dimension");
    }
}

}  // namespace

ProximityCheck check_proximity(const State& y, const State& ytilde, const ProximityBall& ball) {
    if (y.size() != ytilde.size()) throw std::invalid_argument("proximity check: dimension mismatch");
    ProximityCheck check;
    check.residual = norm_of(y - ytilde, ball.norm);
    check.inside = check.residual < ball.radius;
    return check;
}

void MpcConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("mpc.horizon must be at least 1");
    const Eigen::Index n = setpoint.size();
    if (n == 0) throw std::invalid_argument("mpc.setpoint is empty");
    if (Q.rows() != n || Q.cols() != n) throw std::invalid_argument("mpc.Q must be n x n");
    if (P.rows() != n || P.cols() != n) throw std::invalid_argument("mpc terminal weight must be n x n");
    if (R.rows() != R.cols() || R.rows() != static_cast<Eigen::Index>(input_box.dim())) {
        throw std::invalid_argument("mpc.R must be m x m");
    }
    if (!is_positive_definite(Q)) throw std::invalid_argument("mpc.Q must be symmetric positive definite");
    if (!is_positive_definite(R)) throw std::invalid_argument("mpc.R must be symmetric positive definite");
    if (!is_positive_semidefinite(P)) throw std::invalid_argument("mpc terminal weight must be positive semidefinite");
    if (state_box.dim() != static_cast<std::size_t>(n)) throw std::invalid_argument("state box dimension mismatch");
    if (!state_box.contains(setpoint)) throw std::invalid_argument("mpc.setpoint lies outside the state box");
    if (!(terminal_set_radius >= 0.0) || !std::isfinite(terminal_set_radius)) {
        throw std::invalid_argument("mpc.terminal_radius must be nonnegative");
    }
    if (proximity && !(proximity->radius > 0.0 && std::isfinite(proximity->radius))) {
        throw std::invalid_argument("mpc.proximity_radius must be positive");
    }
}

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "max_iterations";
        case SolveStatus::infeasible_relaxed: return "infeasible_relaxed";
    }
    return "unknown";
}

std::vector<State> rollout(const PlantModel& model, const State& x0, std::span<const ControlInput> controls) {
    if (controls.empty()) throw std::invalid_argument("rollout needs at least one control");
    std::vector<State> states;
    states.reserve(controls.size());
    const State* current = &x0;
    for (const auto& u : controls) {
        states.push_back(model.step(*current, u));
        current = &states.back();
    }
    return states;
}

double evaluate_cost(const MpcConfig& cfg, std::span<const State> predicted,
                     std::span<const ControlInput> controls) {
    const std::size_t N = static_cast<std::size_t>(cfg.horizon);
    if (predicted.size() != N || controls.size() != N) {
        throw std::invalid_argument("evaluate_cost: trajectory length does not match the horizon");
    }
    check_sequence_dims(predicted, cfg.setpoint.size(), "predicted output");
    check_sequence_dims(controls, cfg.R.rows(), "control");
    double cost = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        cost += quad(cfg.Q, predicted[j] - cfg.setpoint) + quad(cfg.R, controls[j]);
    }
    cost += quad(cfg.P, predicted.back() - cfg.setpoint);
    return cost;
}

double evaluate_cost(const MpcConfig& cfg, const State& measured, std::span<const State> predicted,
                     std::span<const ControlInput> controls) {
    if (measured.size() != cfg.setpoint.size()) throw std::invalid_argument("measured output has wrong dimension");
    return quad(cfg.Q, measured - cfg.setpoint) + evaluate_cost(cfg, predicted, controls);
}

Vector cost_gradient(const MpcConfig& cfg, const PlantModel& model, const State& x0,
                     std::span<const ControlInput> controls) {
    if (controls.size() != static_cast<std::size_t>(cfg.horizon)) {
        throw std::invalid_argument("cost_gradient: control sequence length does not match the horizon");
    }
    ShootingProblem problem(cfg, model, x0, {}, /*constrained=*/false);
    Vector grad;
    problem.merit(stack(controls, problem.input_dim()), Vector(), 1.0, &grad);
    return grad;
}

std::vector<ControlInput> shift_controls(std::span<const ControlInput> previous) {
    std::vector<ControlInput> shifted(previous.begin(), previous.end());
    if (shifted.size() > 1) {
        std::rotate(shifted.begin(), shifted.begin() + 1, shifted.end());
        shifted.back() = shifted[shifted.size() - 2];
    }
    return shifted;
}

SolveResult solve(const MpcConfig& cfg, const PlantModel& model, const State& x0,
                  std::span<const State> reference, const SolveResult* warm_start) {
    const std::size_t N = static_cast<std::size_t>(cfg.horizon);
    const Eigen::Index m = static_cast<Eigen::Index>(model.input_dim());
    if (x0.size() != static_cast<Eigen::Index>(model.state_dim()) || !all_finite(x0)) {
        throw std::invalid_argument("solve: invalid initial state");
    }
    if (reference.size() > N) throw std::invalid_argument("solve: reference longer than the horizon");
    check_sequence_dims(reference, x0.size(), "reference point");

    std::vector<ControlInput> initial;
    if (warm_start && warm_start->controls.size() == N) {
        initial = shift_controls(warm_start->controls);
    } else {
        // Box midpoint: a zero input can sit on a degenerate point of the model
        // (e.g. empty tanks, where sqrt(h) has no useful derivative).
        initial.assign(N, 0.5 * (cfg.input_box.lower + cfg.input_box.upper));
    }

    const std::span<const State> centers = cfg.proximity ? reference : std::span<const State>{};
    ShootingProblem problem(cfg, model, x0, centers);
    const SolverOptions& opt = cfg.solver;

    Vector u = project_flat(stack(initial, m), cfg.input_box);
    Vector lambda = Vector::Zero(static_cast<Eigen::Index>(problem.constraint_count()));
    double rho = opt.initial_penalty;
    double previous_violation = std::numeric_limits<double>::infinity();

    SolveResult result;
    bool converged = false;
    double violation = 0.0;
    Vector g;
    for (int outer = 0; outer < opt.max_outer_iterations; ++outer) {
        const InnerOutcome inner = minimize_projected(problem, cfg, u, lambda, rho);
        result.inner_iterations += inner.iterations;
        result.outer_iterations = outer + 1;
        violation = problem.constraints(u, g);
        result.violation_history.push_back(violation);
        if (violation <= opt.feasibility_tol && inner.stationary) {
            converged = true;
            break;
        }
        // With the penalty capped, a violation that no longer shrinks means the
        // constraints cannot be met; further passes only burn time.
        if (rho >= opt.max_penalty && violation > (1.0 - opt.stagnation_ratio) * previous_violation) break;
        lambda = (lambda + rho * g).cwiseMax(0.0);
        if (violation > 0.25 * previous_violation) rho = std::min(rho * opt.penalty_growth, opt.max_penalty);
        previous_violation = violation;
    }

    result.controls = unstack(u, m);
    result.predicted_outputs = rollout(model, x0, result.controls);
    result.cost = evaluate_cost(cfg, x0, result.predicted_outputs, result.controls);
    result.constraint_violation = violation;
    if (converged) {
        result.status = SolveStatus::converged;
    } else if (violation > opt.feasibility_tol) {
        result.status = SolveStatus::infeasible_relaxed;
    } else {
        result.status = SolveStatus::max_iterations;
    }
    return result;
}

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
    Matrix P = Q;
    for (int it = 0; it < 1000000; ++it) {
        const Matrix S = R + B.transpose() * P * B;
        const Matrix K = S.ldlt().solve(B.transpose() * P * A);
        Matrix next = A.transpose() * P * A - A.transpose() * P * B * K + Q;
        next = 0.5 * (next + next.transpose());
        const double change = (next - P).cwiseAbs().maxCoeff();
        P = std::move(next);
        if (change <= 1e-13 * (1.0 + P.cwiseAbs().maxCoeff())) return P;
    }
    throw std::runtime_error("DARE iteration did not converge");
}

Matrix terminal_weight_from_dare(const PlantModel& model, const State& setpoint,
                                 const ControlInput& equilibrium_input, const Matrix& Q,
                                 const Matrix& R) {
    const Linearization lin = model.jacobians(setpoint, equilibrium_input);
    return solve_dare(lin.A, lin.B, Q, R);
}

}  // namespace mpcguard
