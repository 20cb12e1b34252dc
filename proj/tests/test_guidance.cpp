#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "reflow/gaussian.hpp"
#include "reflow/guidance.hpp"
#include "reflow/solvers.hpp"
#include "reflow/state.hpp"
#include "reflow/velocity_field.hpp"
#include "test_support.hpp"

using namespace reflow;
using testsupport::bitwise_equal;
using testsupport::TestRng;

namespace {

// Gradient descent on the discrete steering objective, using only numeric
// gradients of lqr_objective. Serves as the independent optimum against which
// the closed-form controllers are checked.
std::vector<StateVector> minimize_objective(const LqrProblem& problem, int iters,
                                            double step) {
    const int n = problem.grid.steps();
    const int d = problem.z0.dim();
    std::vector<StateVector> controls(static_cast<std::size_t>(n), StateVector::zeros(d));
    const double h = 1e-6;
    for (int it = 0; it < iters; ++it) {
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < d; ++i) {
                std::vector<double> bumped = controls[static_cast<std::size_t>(k)].values();
                bumped[static_cast<std::size_t>(i)] += h;
                std::vector<StateVector> up = controls;
                up[static_cast<std::size_t>(k)] = StateVector(bumped);
                bumped[static_cast<std::size_t>(i)] -= 2 * h;
                std::vector<StateVector> down = controls;
                down[static_cast<std::size_t>(k)] = StateVector(bumped);
                const double g =
                    (lqr_objective(up, problem) - lqr_objective(down, problem)) / (2 * h);
                std::vector<double> next = controls[static_cast<std::size_t>(k)].values();
                next[static_cast<std::size_t>(i)] -= step * g;
                controls[static_cast<std::size_t>(k)] = StateVector(next);
            }
        }
    }
    return controls;
}

std::vector<StateVector> roll_forward(const LqrProblem& problem,
                                      const std::vector<StateVector>& controls) {
    std::vector<StateVector> states{problem.z0};
    for (int k = 0; k < problem.grid.steps(); ++k) {
        const double dt = problem.grid.knot(k + 1) - problem.grid.knot(k);
        states.push_back(states.back() + controls[static_cast<std::size_t>(k)] * dt);
    }
    return states;
}

}  // namespace

TEST_CASE("dual target interpolates and is exact at the ends") {
    const StateVector src({1.0, -0.0});
    const StateVector prev({2.0, 5.0});
    CHECK(bitwise_equal(dual_target(src, prev, 0.0), src));
    CHECK(bitwise_equal(dual_target(src, prev, 1.0), prev));
    const StateVector mid = dual_target(src, prev, 0.7);
    CHECK(mid[0] == doctest::Approx(1.7).epsilon(1e-15));
    CHECK(mid[1] == doctest::Approx(3.5).epsilon(1e-15));
    CHECK_REFLOW_ERROR(dual_target(src, prev, -0.1), ErrorCode::invalid_argument);
    CHECK_REFLOW_ERROR(dual_target(src, prev, 1.1), ErrorCode::invalid_argument);
    CHECK_REFLOW_ERROR(dual_target(src, StateVector::zeros(3), 0.5),
                       ErrorCode::dimension_mismatch);
}

TEST_CASE("weighted target pools mean and weight") {
    const TargetSummary single = weighted_target({{StateVector({2.0}), 3.0}});
    CHECK(single.mean[0] == 2.0);
    CHECK(single.total_weight == 3.0);

    const TargetSummary pooled =
        weighted_target({{StateVector({0.0}), 1.0}, {StateVector({1.0}), 3.0}});
    CHECK(pooled.mean[0] == doctest::Approx(0.75));
    CHECK(pooled.total_weight == doctest::Approx(4.0));

    CHECK_REFLOW_ERROR(weighted_target({}), ErrorCode::empty_targets);
    CHECK_REFLOW_ERROR(weighted_target({{StateVector({1.0}), 0.0}}),
                       ErrorCode::non_positive_lambda);
    CHECK_REFLOW_ERROR(weighted_target({{StateVector({1.0}), -2.0}}),
                       ErrorCode::non_positive_lambda);
}

TEST_CASE("guided velocity blends affinely between base and conditional") {
    const GaussianEndpoints unit = GaussianEndpoints::standard(2);
    const VelocityField base = VelocityField::gaussian_marginal(unit);
    const StateVector target({1.0, -1.0});

    TestRng rng(5);
    for (int i = 0; i < 30; ++i) {
        const StateVector x = rng.state(2);
        const double t = rng.uniform(0.0, 0.99);
        const double eta = rng.uniform(0.0, 1.0);
        const StateVector v_base = base.eval(x, t);
        const StateVector v_cond = conditional_velocity(x, t, target, AnchorEnd::time_one);
        const StateVector v = guided_velocity(x, t, base, target, eta);
        for (int k = 0; k < 2; ++k) {
            CHECK(v[k] == doctest::Approx(v_base[k] + eta * (v_cond[k] - v_base[k]))
                              .epsilon(1e-13));
        }
    }

    const StateVector x({0.3, 0.4});
    CHECK(bitwise_equal(guided_velocity(x, 0.5, base, target, 0.0), base.eval(x, 0.5)));
    CHECK(bitwise_equal(guided_velocity(x, 0.5, base, target, 1.0),
                        conditional_velocity(x, 0.5, target, AnchorEnd::time_one)));

    // Zero base isolates the conditional pull scaled by eta.
    const VelocityField zero = VelocityField::constant(StateVector::zeros(2));
    const StateVector pulled = guided_velocity(x, 0.0, zero, target, 0.9);
    CHECK(pulled[0] == doctest::Approx(0.9 * (1.0 - 0.3)).epsilon(1e-15));
}

TEST_CASE("guided inversion gates guidance by step index") {
    const GaussianEndpoints unit = GaussianEndpoints::standard(2);
    const VelocityField base = VelocityField::gaussian_marginal(unit);
    const StateVector x0({0.4, -0.2});
    const StateVector anchor({1.0, 2.0});
    const TimeGrid grid = TimeGrid::uniform(8);

    // eta = 0: bitwise identical to the plain trajectory, including every
    // intermediate state and the evaluation count.
    const Trajectory plain =
        run_trajectory(x0, grid, Direction::forward, SolverKind::midpoint, base);
    const Trajectory gated =
        guided_inversion(x0, anchor, grid, SolverKind::midpoint, base, 0.0, 4);
    CHECK(bitwise_equal(plain.states, gated.states));
    CHECK(plain.field_evals == gated.field_evals);

    // guided_steps = 0 disables guidance regardless of eta.
    const Trajectory zero_gate =
        guided_inversion(x0, anchor, grid, SolverKind::midpoint, base, 0.9, 0);
    CHECK(bitwise_equal(plain.states, zero_gate.states));

    // eta = 1 with a zero base field over every step follows the chord onto the
    // anchor.
    const VelocityField zero = VelocityField::constant(StateVector::zeros(2));
    const Trajectory pinned =
        guided_inversion(x0, anchor, grid, SolverKind::euler, zero, 1.0, 8);
    CHECK(distance(pinned.endpoint(), anchor) < 1e-12);

    // Metadata records the settings; inversion has no mix weight.
    REQUIRE(pinned.guidance.has_value());
    CHECK(pinned.guidance->eta == 1.0);
    CHECK(pinned.guidance->guided_steps == 8);
    CHECK_FALSE(pinned.guidance->lambda_mix.has_value());

    CHECK_REFLOW_ERROR(guided_inversion(x0, anchor, grid, SolverKind::euler, base, 0.5, 9),
                       ErrorCode::invalid_argument);
    CHECK_REFLOW_ERROR(guided_inversion(x0, anchor, grid, SolverKind::euler, base, 0.5, -1),
                       ErrorCode::invalid_argument);
}

TEST_CASE("dual guided sampling reduces to source-only guidance at lambda zero") {
    const GaussianEndpoints unit = GaussianEndpoints::standard(2);
    const VelocityField base = VelocityField::gaussian_marginal(unit);
    const StateVector x1({1.2, -0.8});
    const StateVector src({0.5, 0.5});
    const StateVector prev({-1.0, 3.0});
    const TimeGrid grid = TimeGrid::uniform(8);

    const Trajectory lam0 = dual_guided_sampling(x1, src, prev, grid, SolverKind::midpoint,
                                                 base, 0.9, 0.0, 4);
    const Trajectory src_only = dual_guided_sampling(x1, src, src, grid, SolverKind::midpoint,
                                                     base, 0.9, 1.0, 4);
    CHECK(bitwise_equal(lam0.states, src_only.states));

    // eta = 0 matches the plain reverse trajectory bitwise.
    const Trajectory plain =
        run_trajectory(x1, grid, Direction::reverse, SolverKind::midpoint, base);
    const Trajectory off =
        dual_guided_sampling(x1, src, prev, grid, SolverKind::midpoint, base, 0.0, 0.7, 4);
    CHECK(bitwise_equal(plain.states, off.states));

    // Fully guided chord on a zero base lands on the dual target.
    const VelocityField zero = VelocityField::constant(StateVector::zeros(2));
    const Trajectory pinned =
        dual_guided_sampling(x1, src, prev, grid, SolverKind::euler, zero, 1.0, 0.7, 8);
    CHECK(distance(pinned.endpoint(), dual_target(src, prev, 0.7)) < 1e-12);
    REQUIRE(pinned.guidance.has_value());
    REQUIRE(pinned.guidance->lambda_mix.has_value());
    CHECK(*pinned.guidance->lambda_mix == 0.7);
    CHECK(pinned.times.front() == 1.0);
    CHECK(pinned.times.back() == 0.0);
}

TEST_CASE("objective evaluates control energy plus terminal penalties") {
    const StateVector z0({0.0, 0.0});
    const StateVector x({3.0, 4.0});
    const LqrProblem problem{z0, {{x, 2.0}}, TimeGrid::uniform(4)};

    const std::vector<StateVector> zero_controls(4, StateVector::zeros(2));
    // No motion: objective is (w/2) |z0 - X|^2 = 1.0 * 25.
    CHECK(lqr_objective(zero_controls, problem) == doctest::Approx(25.0));

    const LqrProblem at_target{x, {{x, 2.0}}, TimeGrid::uniform(4)};
    CHECK(lqr_objective(zero_controls, at_target) == doctest::Approx(0.0));

    // Constant unit control along dim 0 for a unit horizon: energy is 0.5.
    const std::vector<StateVector> unit_controls(4, StateVector({1.0, 0.0}));
    const LqrProblem free_end{z0, {{StateVector({1.0, 0.0}), 2.0}}, TimeGrid::uniform(4)};
    CHECK(lqr_objective(unit_controls, free_end) == doctest::Approx(0.5));

    CHECK_REFLOW_ERROR(lqr_objective(std::vector<StateVector>(3, StateVector::zeros(2)),
                                     problem),
                       ErrorCode::invalid_argument);
    CHECK_REFLOW_ERROR(lqr_objective(zero_controls, LqrProblem{z0, {}, TimeGrid::uniform(4)}),
                       ErrorCode::empty_targets);
}

TEST_CASE("multi-target and pooled objectives differ by a control-free constant") {
    TestRng rng(17);
    for (int dim : {2, 3, 5}) {
        std::vector<WeightedTarget> targets;
        const int n_targets = dim;  // vary both together for coverage
        for (int i = 0; i < n_targets; ++i) {
            targets.push_back({rng.state(dim), rng.uniform(0.5, 2.5)});
        }
        const LqrProblem multi{rng.state(dim), targets, TimeGrid::uniform(6)};
        const TargetSummary pooled = weighted_target(targets);
        const LqrProblem reduced{multi.z0, {{pooled.mean, pooled.total_weight}},
                                 multi.grid};

        // Closed form for the offset: sum_i (w_i/2) |X_i - mu_hat|^2.
        double expected = 0.0;
        for (const WeightedTarget& t : targets) {
            const double d2 = distance(t.x, pooled.mean);
            expected += 0.5 * t.weight * d2 * d2;
        }

        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<StateVector> controls;
            for (int k = 0; k < 6; ++k) controls.push_back(rng.state(dim, -4.0, 4.0));
            const double diff =
                lqr_objective(controls, multi) - lqr_objective(controls, reduced);
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
            CHECK(diff == doctest::Approx(expected).epsilon(1e-9));
        }
        const double denom = std::max(std::abs(lo), 1e-30);
        CHECK((hi - lo) / denom < 1e-10);
    }
}

TEST_CASE("closed-form controller values and guards") {
    const StateVector mu({1.0});
    CHECK(optimal_control_closed_form(StateVector({0.0}), 0.0, mu)[0] == doctest::Approx(1.0));
    CHECK(optimal_control_closed_form(mu, 0.5, mu)[0] == 0.0);
    CHECK_REFLOW_ERROR(optimal_control_closed_form(StateVector({0.0}), 1.0, mu),
                       ErrorCode::time_singularity);
}

TEST_CASE("finite-weight controller values, guards, and limit slope") {
    const StateVector z({0.0});
    const StateVector target({1.0});
    // lam = 1 at t = 0: (1 - 0) / (1 + 1) = 0.5.
    CHECK(finite_lambda_control(z, 0.0, target, 1.0)[0] == doctest::Approx(0.5));
    CHECK(finite_lambda_control(target, 0.3, target, 5.0)[0] == 0.0);
    CHECK_REFLOW_ERROR(finite_lambda_control(z, 0.0, target, 0.0),
                       ErrorCode::non_positive_lambda);
    CHECK_REFLOW_ERROR(finite_lambda_control(z, 0.0, target, -3.0),
                       ErrorCode::non_positive_lambda);
    CHECK_REFLOW_ERROR(finite_lambda_control(z, 1.0, target, 2.0),
                       ErrorCode::invalid_argument);

    // |finite - closed form| shrinks like 1/lambda.
    const StateVector z2({0.25, -0.5});
    const StateVector tgt2({1.0, 2.0});
    const double t = 0.5;
    std::vector<double> lambdas{1e2, 1e3, 1e4, 1e5};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double lam : lambdas) {
        const double err = distance(finite_lambda_control(z2, t, tgt2, lam),
                                    optimal_control_closed_form(z2, t, tgt2));
        const double lx = std::log(lam);
        const double ly = std::log(err);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(lambdas.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.15));
}

TEST_CASE("finite-weight controller matches the numerically optimized policy") {
    // Independent oracle: minimize the discrete objective by gradient descent on
    // numeric gradients, then compare the resulting controls with the feedback
    // law along the optimal path.
    TestRng rng(31);
    const int n = 4, d = 2;
    const double w = 2.5;
    const StateVector target = rng.state(d);
    const LqrProblem problem{rng.state(d), {{target, w}}, TimeGrid::uniform(n)};

    const std::vector<StateVector> best = minimize_objective(problem, 400, 0.3);
    const std::vector<StateVector> path = roll_forward(problem, best);

    for (int k = 0; k < n; ++k) {
        const double t = problem.grid.knot(k);
        const StateVector predicted =
            finite_lambda_control(path[static_cast<std::size_t>(k)], t, target, w);
        CHECK(distance(predicted, best[static_cast<std::size_t>(k)]) < 1e-4);
    }

    // The multi-target optimum coincides with the pooled-problem optimum.
    const std::vector<WeightedTarget> targets{{rng.state(d), 1.0}, {rng.state(d), 2.0}};
    const LqrProblem multi{problem.z0, targets, TimeGrid::uniform(n)};
    const TargetSummary pooled = weighted_target(targets);
    const LqrProblem reduced{problem.z0, {{pooled.mean, pooled.total_weight}}, multi.grid};
    const std::vector<StateVector> multi_best = minimize_objective(multi, 400, 0.3);
    const std::vector<StateVector> reduced_best = minimize_objective(reduced, 400, 0.3);
    for (int k = 0; k < n; ++k) {
        CHECK(distance(multi_best[static_cast<std::size_t>(k)],
                       reduced_best[static_cast<std::size_t>(k)]) < 1e-4);
    }
}

TEST_CASE("proposition-1 style integration lands on the weighted mean") {
    const LqrProblem equal{StateVector({5.0}),
                           {{StateVector({0.0}), 1.0}, {StateVector({1.0}), 1.0}},
                           TimeGrid::uniform(16)};
    const Prop1Report r1 = verify_proposition1(equal);
    CHECK(r1.mu_hat[0] == doctest::Approx(0.5));
    CHECK(r1.gap < 1e-10);

    const LqrProblem skewed{StateVector({-2.0}),
                            {{StateVector({0.0}), 1.0}, {StateVector({1.0}), 3.0}},
                            TimeGrid::uniform(16)};
    CHECK(verify_proposition1(skewed).mu_hat[0] == doctest::Approx(0.75));

    const LqrProblem single{StateVector({3.0}), {{StateVector({1.5}), 2.0}},
                            TimeGrid::uniform(8)};
    const Prop1Report r2 = verify_proposition1(single);
    CHECK(distance(r2.endpoint, StateVector({1.5})) < 1e-10);

    TestRng rng(41);
    for (int count : {2, 3, 5}) {
        std::vector<WeightedTarget> targets;
        for (int i = 0; i < count; ++i) targets.push_back({rng.state(3), rng.uniform(0.5, 2.5)});
        const LqrProblem problem{rng.state(3), targets, TimeGrid::uniform(16)};
        CHECK(verify_proposition1(problem).gap < 1e-10);
    }
}

TEST_CASE("guidance config validation") {
    GuidanceConfig config;
    config.validate();
    config.eta = 1.2;
    CHECK_REFLOW_ERROR(config.validate(), ErrorCode::invalid_argument);
    config.eta = 0.5;
    config.lambda_mix = -0.2;
    CHECK_REFLOW_ERROR(config.validate(), ErrorCode::invalid_argument);
    config.lambda_mix = 0.5;
    config.guided_steps = -2;
    CHECK_REFLOW_ERROR(config.validate(), ErrorCode::invalid_argument);
    config.guided_steps = 4;
    config.targets = {StateVector({0.0}), StateVector({1.0}), StateVector({2.0})};
    CHECK_REFLOW_ERROR(config.validate(), ErrorCode::invalid_argument);
}
