#pragma once

#include <vector>

#include "reflow/solvers.hpp"
#include "reflow/state.hpp"
#include "reflow/velocity_field.hpp"

namespace reflow {

struct GuidanceConfig {
    double eta = 0.9;
    double lambda_mix = 0.7;
    int guided_steps = 4;
    std::vector<StateVector> targets;

    // Range checks only; guided_steps vs grid size is checked where a grid is known.
    void validate() const;
};

struct WeightedTarget {
    StateVector x;
    double weight = 1.0;
};

struct LqrProblem {
    StateVector z0;
    std::vector<WeightedTarget> targets;
    TimeGrid grid;
};

// x_source + lambda_mix * (x_prev - x_source). Exact at the ends: 0 returns
// x_source, 1 returns x_prev, both bitwise.
StateVector dual_target(const StateVector& x_source, const StateVector& x_prev,
                        double lambda_mix);

struct TargetSummary {
    StateVector mean;
    double total_weight = 0.0;
};

// Weighted mean of the targets and the summed weight; the reduction that collapses
// a multi-target steering problem to a single composite target.
TargetSummary weighted_target(const std::vector<WeightedTarget>& targets);

// base(x, t) + eta * (conditional(x, t, target) - base(x, t)), target anchored at t=1.
StateVector guided_velocity(const StateVector& x, double t, const VelocityField& base,
                            const StateVector& target, double eta);

// Forward trajectory 0 -> 1. Steps with index < guided_steps blend the base field
// with the conditional field toward noise_target; the rest run the base field alone.
Trajectory guided_inversion(const StateVector& x0, const StateVector& noise_target,
                            const TimeGrid& grid, SolverKind solver,
                            const VelocityField& base_field, double eta, int guided_steps);

// Reverse trajectory 1 -> 0. The first guided_steps steps steer toward
// dual_target(x_source, x_prev, lambda_mix), anchored at t=0 so the guided flow
// lands on the anchor rather than diverging from the reverse start.
Trajectory dual_guided_sampling(const StateVector& x1, const StateVector& x_source,
                                const StateVector& x_prev, const TimeGrid& grid,
                                SolverKind solver, const VelocityField& base_field, double eta,
                                double lambda_mix, int guided_steps);

// Total control energy plus terminal penalties: sum_k 0.5*|c_k|^2*dt_k evaluated
// along z_{k+1} = z_k + c_k*dt_k from problem.z0, plus sum_i (w_i/2)*|z_N - X_i|^2.
double lqr_objective(const std::vector<StateVector>& controls, const LqrProblem& problem);

// (mu_hat - z) / (1 - t); the infinite-weight limit of the steering controller.
StateVector optimal_control_closed_form(const StateVector& z, double t,
                                        const StateVector& mu_hat);

// (target - z) / (1/lam + (1 - t)); approaches the closed form as lam grows, with
// error O(1/lam).
StateVector finite_lambda_control(const StateVector& z, double t, const StateVector& target,
                                  double lam);

struct Prop1Report {
    StateVector endpoint;
    StateVector mu_hat;
    double gap = 0.0;
};

// Euler-integrates the closed-form controller toward the weighted mean of the
// problem's targets and reports how far the endpoint lands from it. Euler is exact
// on this linear path, so the gap is floating-point noise.
Prop1Report verify_proposition1(const LqrProblem& problem);

}  // namespace reflow
