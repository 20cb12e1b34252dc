#include "reflow/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace reflow {

namespace {

constexpr double kRangeSlack = 1e-12;

void check_step_range(double t, double dt) {
    if (!std::isfinite(t) || !std::isfinite(dt)) {
        throw Error(ErrorCode::invalid_argument, "step time or increment is not finite");
    }
    if (dt == 0.0) {
        throw Error(ErrorCode::invalid_argument, "step increment must be nonzero");
    }
    if (t < -kRangeSlack || t > 1.0 + kRangeSlack) {
        throw Error(ErrorCode::step_out_of_range, "step start time outside [0, 1]");
    }
    const double t_next = t + dt;
    if (t_next < -kRangeSlack || t_next > 1.0 + kRangeSlack) {
        throw Error(ErrorCode::step_out_of_range, "step end time outside [0, 1]");
    }
}

void check_midpoint_time(double t, double dt) {
    const double t_half = t + 0.5 * dt;
    if (t_half < -kRangeSlack || t_half >= 1.0) {
        throw Error(ErrorCode::step_out_of_range, "midpoint time outside [0, 1)");
    }
}

}  // namespace

const char* to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::euler: return "euler";
        case SolverKind::midpoint: return "midpoint";
        case SolverKind::midpoint_cached: return "midpoint-cached";
    }
    return "unknown";
}

const char* to_string(Direction direction) {
    return direction == Direction::forward ? "forward" : "reverse";
}

SolverKind parse_solver_kind(std::string_view name) {
    if (name == "euler") return SolverKind::euler;
    if (name == "midpoint") return SolverKind::midpoint;
    if (name == "midpoint-cached") return SolverKind::midpoint_cached;
    throw Error(ErrorCode::invalid_argument,
                "unknown solver '" + std::string(name) +
                    "' (expected euler, midpoint, or midpoint-cached)");
}

StateVector euler_step(const StateVector& x, double t, double dt, const VelocityField& field) {
    check_step_range(t, dt);
    return x + field.eval(x, t) * dt;
}

StateVector midpoint_step(const StateVector& x, double t, double dt, const VelocityField& field) {
    check_step_range(t, dt);
    check_midpoint_time(t, dt);
    StateVector x_half = x + field.eval(x, t) * (0.5 * dt);
    return x + field.eval(x_half, t + 0.5 * dt) * dt;
}

CachedStepResult midpoint_cached_step(const StateVector& x, double t, double dt,
                                      const VelocityField& field,
                                      const std::optional<StateVector>& cache) {
    check_step_range(t, dt);
    check_midpoint_time(t, dt);
    const StateVector& v_predict = cache ? *cache : field.eval(x, t);
    StateVector x_half = x + v_predict * (0.5 * dt);
    StateVector v_half = field.eval(x_half, t + 0.5 * dt);
    return CachedStepResult{x + v_half * dt, std::move(v_half)};
}

namespace detail {

Trajectory integrate(const StateVector& x_start, const TimeGrid& grid, Direction direction,
                     SolverKind solver,
                     const std::function<const VelocityField&(int)>& field_for_step) {
    const int n = grid.steps();
    Trajectory traj;
    traj.direction = direction;
    traj.times.reserve(static_cast<std::size_t>(n) + 1);
    traj.states.reserve(static_cast<std::size_t>(n) + 1);

    auto knot_at = [&](int k) {
        return direction == Direction::forward ? grid.knot(k) : grid.knot(n - k);
    };

    traj.times.push_back(knot_at(0));
    traj.states.push_back(x_start);

    std::optional<StateVector> cache;
    for (int k = 0; k < n; ++k) {
        const double t = knot_at(k);
        const double dt = knot_at(k + 1) - t;
        const VelocityField& field = field_for_step(k);
        const StateVector& x = traj.states.back();

        switch (solver) {
            case SolverKind::euler:
                traj.states.push_back(euler_step(x, t, dt, field));
                traj.field_evals += 1;
                break;
            case SolverKind::midpoint:
                traj.states.push_back(midpoint_step(x, t, dt, field));
                traj.field_evals += 2;
                break;
            case SolverKind::midpoint_cached: {
                traj.field_evals += cache ? 1 : 2;
                CachedStepResult result = midpoint_cached_step(x, t, dt, field, cache);
                traj.states.push_back(std::move(result.state));
                cache = std::move(result.cache);
                break;
            }
        }
        traj.times.push_back(knot_at(k + 1));
    }
    return traj;
}

}  // namespace detail

Trajectory run_trajectory(const StateVector& x_start, const TimeGrid& grid, Direction direction,
                          SolverKind solver, const VelocityField& field) {
    return detail::integrate(x_start, grid, direction, solver,
                             [&](int) -> const VelocityField& { return field; });
}

OrderFit convergence_order(const StateVector& x_start, const StateVector& exact_endpoint,
                           Direction direction, SolverKind solver, const VelocityField& field,
                           const std::vector<int>& n_list) {
    std::set<int> distinct(n_list.begin(), n_list.end());
    if (distinct.size() < 3) {
        throw Error(ErrorCode::invalid_argument,
                    "convergence fit needs at least three distinct step counts");
    }

    OrderFit fit;
    fit.points.reserve(n_list.size());
    for (int n : n_list) {
        if (n < 1) {
            throw Error(ErrorCode::invalid_argument, "step count must be positive");
        }
        Trajectory traj =
            run_trajectory(x_start, TimeGrid::uniform(n), direction, solver, field);
        fit.points.push_back(
            OrderPoint{n, distance(traj.endpoint(), exact_endpoint), traj.field_evals});
    }

    std::vector<double> xs;
    std::vector<double> ys;
    for (const OrderPoint& p : fit.points) {
        if (p.error < 1e-14) continue;
        xs.push_back(std::log(1.0 / p.steps));
        ys.push_back(std::log(p.error));
    }
    if (xs.size() < 2) {
        return fit;  // exact integration, no measurable order
    }

    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return fit;
}

}  // namespace reflow
