#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "reflow/state.hpp"
#include "reflow/velocity_field.hpp"

namespace reflow {

enum class SolverKind {
    euler,
    midpoint,
    midpoint_cached,
};

enum class Direction {
    forward,
    reverse,
};

const char* to_string(SolverKind kind);
const char* to_string(Direction direction);

// Accepts "euler", "midpoint", "midpoint-cached".
SolverKind parse_solver_kind(std::string_view name);

// Guidance settings a trajectory was produced under, carried for reporting.
struct GuidanceMeta {
    double eta = 0.0;
    std::optional<double> lambda_mix;
    int guided_steps = 0;
};

struct Trajectory {
    std::vector<double> times;        // N+1 knots in traversal order
    std::vector<StateVector> states;  // one state per knot
    Direction direction = Direction::forward;
    long field_evals = 0;
    std::optional<GuidanceMeta> guidance;

    int steps() const { return static_cast<int>(times.size()) - 1; }
    const StateVector& endpoint() const { return states.back(); }
};

// x + field(x, t) * dt. dt < 0 steps backward in time.
StateVector euler_step(const StateVector& x, double t, double dt, const VelocityField& field);

// Classical two-stage explicit midpoint: predict x_half = x + field(x, t) * dt/2,
// then advance x + field(x_half, t + dt/2) * dt. Two field evaluations.
StateVector midpoint_step(const StateVector& x, double t, double dt, const VelocityField& field);

struct CachedStepResult {
    StateVector state;
    StateVector cache;  // midpoint-time velocity, feeds the next step's prediction
};

// Midpoint step that reuses `cache` (the previous step's midpoint velocity) for the
// half-step prediction. Without a cache it behaves exactly as midpoint_step. One
// field evaluation per step after the first.
CachedStepResult midpoint_cached_step(const StateVector& x, double t, double dt,
                                      const VelocityField& field,
                                      const std::optional<StateVector>& cache);

namespace detail {

// Drives N steps over the grid in the given direction. field_for_step(k) selects the
// field for traversal step k, which lets callers gate guidance by step index; the
// midpoint-cached cache is carried across field switches.
Trajectory integrate(const StateVector& x_start, const TimeGrid& grid, Direction direction,
                     SolverKind solver,
                     const std::function<const VelocityField&(int)>& field_for_step);

}  // namespace detail

Trajectory run_trajectory(const StateVector& x_start, const TimeGrid& grid, Direction direction,
                          SolverKind solver, const VelocityField& field);

struct OrderPoint {
    int steps = 0;
    double error = 0.0;
    long field_evals = 0;
};

// slope is empty when the integration is exact (all endpoint errors below 1e-14),
// the order-infinity sentinel.
struct OrderFit {
    std::vector<OrderPoint> points;
    std::optional<double> slope;

    bool exact() const { return !slope.has_value(); }
};

// Runs the solver at each N in n_list on uniform grids and fits log(endpoint error)
// against log(1/N) by least squares. Needs at least three distinct step counts.
OrderFit convergence_order(const StateVector& x_start, const StateVector& exact_endpoint,
                           Direction direction, SolverKind solver, const VelocityField& field,
                           const std::vector<int>& n_list);

}  // namespace reflow
