#include "reflow/guidance.hpp"

#include <cmath>
#include <utility>

namespace reflow {

namespace {

void check_unit_range(double value, const char* name) {
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
        throw Error(ErrorCode::invalid_argument, std::string(name) + " must lie in [0, 1]");
    }
}

void check_guided_steps(int guided_steps, int grid_steps) {
    if (guided_steps < 0 || guided_steps > grid_steps) {
        throw Error(ErrorCode::invalid_argument,
                    "guided_steps must lie between 0 and the grid step count");
    }
}

Trajectory gated_run(const StateVector& start, const TimeGrid& grid, Direction direction,
                     SolverKind solver, const VelocityField& base_field,
                     const VelocityField& guided_field, int guided_steps) {
    return detail::integrate(start, grid, direction, solver,
                             [&](int k) -> const VelocityField& {
                                 return k < guided_steps ? guided_field : base_field;
                             });
}

}  // namespace

void GuidanceConfig::validate() const {
    check_unit_range(eta, "eta");
    check_unit_range(lambda_mix, "lambda_mix");
    if (guided_steps < 0) {
        throw Error(ErrorCode::invalid_argument, "guided_steps must be nonnegative");
    }
    if (targets.size() > 2) {
        throw Error(ErrorCode::invalid_argument, "at most two guidance targets are supported");
    }
}

StateVector dual_target(const StateVector& x_source, const StateVector& x_prev,
                        double lambda_mix) {
    require_same_dim(x_source, x_prev, "dual_target");
    check_unit_range(lambda_mix, "lambda_mix");
    if (lambda_mix == 0.0) return x_source;
    if (lambda_mix == 1.0) return x_prev;
    return x_source + (x_prev - x_source) * lambda_mix;
}

TargetSummary weighted_target(const std::vector<WeightedTarget>& targets) {
    if (targets.empty()) {
        throw Error(ErrorCode::empty_targets, "weighted_target needs at least one target");
    }
    const int d = targets.front().x.dim();
    std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
    double total = 0.0;
    for (const WeightedTarget& target : targets) {
        require_same_dim(target.x, targets.front().x, "weighted_target");
        if (!std::isfinite(target.weight) || target.weight <= 0.0) {
            throw Error(ErrorCode::non_positive_lambda, "target weights must be positive");
        }
        for (int i = 0; i < d; ++i) acc[static_cast<std::size_t>(i)] += target.weight * target.x[i];
        total += target.weight;
    }
    for (double& v : acc) v /= total;
    return TargetSummary{StateVector(std::move(acc)), total};
}

StateVector guided_velocity(const StateVector& x, double t, const VelocityField& base,
                            const StateVector& target, double eta) {
    check_unit_range(eta, "eta");
    if (eta == 0.0) return base.eval(x, t);
    if (eta == 1.0) return conditional_velocity(x, t, target, AnchorEnd::time_one);
    StateVector v_base = base.eval(x, t);
    StateVector v_cond = conditional_velocity(x, t, target, AnchorEnd::time_one);
    return v_base + (v_cond - v_base) * eta;
}

Trajectory guided_inversion(const StateVector& x0, const StateVector& noise_target,
                            const TimeGrid& grid, SolverKind solver,
                            const VelocityField& base_field, double eta, int guided_steps) {
    check_guided_steps(guided_steps, grid.steps());
    VelocityField guided =
        VelocityField::guided(base_field, noise_target, eta, AnchorEnd::time_one);
    Trajectory traj =
        gated_run(x0, grid, Direction::forward, solver, base_field, guided, guided_steps);
    traj.guidance = GuidanceMeta{eta, std::nullopt, guided_steps};
    return traj;
}

Trajectory dual_guided_sampling(const StateVector& x1, const StateVector& x_source,
                                const StateVector& x_prev, const TimeGrid& grid,
                                SolverKind solver, const VelocityField& base_field, double eta,
                                double lambda_mix, int guided_steps) {
    check_guided_steps(guided_steps, grid.steps());
    StateVector anchor = dual_target(x_source, x_prev, lambda_mix);
    VelocityField guided =
        VelocityField::guided(base_field, std::move(anchor), eta, AnchorEnd::time_zero);
    Trajectory traj =
        gated_run(x1, grid, Direction::reverse, solver, base_field, guided, guided_steps);
    traj.guidance = GuidanceMeta{eta, lambda_mix, guided_steps};
    return traj;
}

double lqr_objective(const std::vector<StateVector>& controls, const LqrProblem& problem) {
    const int n = problem.grid.steps();
    if (static_cast<int>(controls.size()) != n) {
        throw Error(ErrorCode::invalid_argument,
                    "control sequence length must equal the grid step count");
    }
    if (problem.targets.empty()) {
        throw Error(ErrorCode::empty_targets, "LQR problem needs at least one target");
    }

    StateVector z = problem.z0;
    double running = 0.0;
    for (int k = 0; k < n; ++k) {
        require_same_dim(controls[static_cast<std::size_t>(k)], problem.z0, "lqr_objective");
        const double dt = problem.grid.knot(k + 1) - problem.grid.knot(k);
        const StateVector& c = controls[static_cast<std::size_t>(k)];
        running += 0.5 * norm(c) * norm(c) * dt;
        z = z + c * dt;
    }

    double terminal = 0.0;
    for (const WeightedTarget& target : problem.targets) {
        require_same_dim(target.x, problem.z0, "lqr_objective");
        if (!std::isfinite(target.weight) || target.weight <= 0.0) {
            throw Error(ErrorCode::non_positive_lambda, "target weights must be positive");
        }
        const double dist = distance(z, target.x);
        terminal += 0.5 * target.weight * dist * dist;
    }
    return running + terminal;
}

StateVector optimal_control_closed_form(const StateVector& z, double t,
                                        const StateVector& mu_hat) {
    return conditional_velocity(z, t, mu_hat, AnchorEnd::time_one);
}

StateVector finite_lambda_control(const StateVector& z, double t, const StateVector& target,
                                  double lam) {
    require_same_dim(z, target, "finite_lambda_control");
    if (!std::isfinite(lam) || lam <= 0.0) {
        throw Error(ErrorCode::non_positive_lambda, "lambda must be positive");
    }
    if (!std::isfinite(t) || t < 0.0 || t >= 1.0) {
        throw Error(ErrorCode::invalid_argument, "time must lie in [0, 1)");
    }
    return (target - z) * (1.0 / (1.0 / lam + (1.0 - t)));
}

Prop1Report verify_proposition1(const LqrProblem& problem) {
    TargetSummary summary = weighted_target(problem.targets);
    require_same_dim(problem.z0, summary.mean, "verify_proposition1");

    StateVector z = problem.z0;
    const int n = problem.grid.steps();
    for (int k = 0; k < n; ++k) {
        const double t = problem.grid.knot(k);
        const double dt = problem.grid.knot(k + 1) - t;
        z = z + optimal_control_closed_form(z, t, summary.mean) * dt;
    }

    const double gap = distance(z, summary.mean);
    return Prop1Report{std::move(z), std::move(summary.mean), gap};
}

}  // namespace reflow
