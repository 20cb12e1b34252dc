#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "reflow/attnmask.hpp"
#include "reflow/gaussian.hpp"
#include "reflow/guidance.hpp"
#include "reflow/multiturn.hpp"
#include "reflow/solvers.hpp"
#include "reflow/velocity_field.hpp"

using namespace reflow;

namespace {

VelocityField oracle_field(int dim) {
    return VelocityField::gaussian_marginal(GaussianEndpoints::standard(dim));
}

void BM_Trajectory(benchmark::State& state, SolverKind solver) {
    const int dim = static_cast<int>(state.range(0));
    const int steps = static_cast<int>(state.range(1));
    const VelocityField field = oracle_field(dim);
    const TimeGrid grid = TimeGrid::uniform(steps);
    const StateVector x0 = sample_endpoint(GaussianEndpoints::standard(dim),
                                           EndpointSide::source, 1);
    long evals = 0;
    for (auto _ : state) {
        Trajectory t = run_trajectory(x0, grid, Direction::forward, solver, field);
        evals = t.field_evals;
        benchmark::DoNotOptimize(t.states.back());
    }
    state.counters["field_evals"] = static_cast<double>(evals);
}

void BM_EditRound(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    SessionConfig config;
    config.grid = TimeGrid::uniform(15);
    config.seed = 1;
    for (auto _ : state) {
        EditSession session =
            EditSession::from_endpoints(GaussianEndpoints::standard(dim), config);
        session.run_round();
        benchmark::DoNotOptimize(session.rounds().back().output);
    }
}

AttentionStack random_stack(int count, int height, int width) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> entry(0.0, 1.0);
    std::vector<AttentionMap> maps;
    for (int i = 0; i < count; ++i) {
        std::vector<double> values(static_cast<std::size_t>(height) * width);
        for (double& v : values) v = entry(rng);
        maps.emplace_back(height, width, values);
    }
    return AttentionStack(maps);
}

void BM_MaskPipeline(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const AttentionStack stack = random_stack(19, side, side);
    const MaskParams params;
    for (auto _ : state) {
        PipelineResult result = pipeline(stack, params, stack);
        benchmark::DoNotOptimize(result.mask.values);
    }
}

void BM_SoftmaxAttention(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> entry(0.0, 1.0);
    std::vector<double> q(static_cast<std::size_t>(side) * side);
    std::vector<double> k(static_cast<std::size_t>(side) * side);
    for (double& v : q) v = entry(rng);
    for (double& v : k) v = entry(rng);
    const RealMatrix qm(side, side, q);
    const RealMatrix km(side, side, k);
    for (auto _ : state) {
        AttentionMap map = softmax_attention(qm, km, side);
        benchmark::DoNotOptimize(map.values());
    }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Trajectory, euler, SolverKind::euler)->Args({8, 64});
BENCHMARK_CAPTURE(BM_Trajectory, midpoint, SolverKind::midpoint)->Args({8, 64});
BENCHMARK_CAPTURE(BM_Trajectory, midpoint_cached, SolverKind::midpoint_cached)->Args({8, 64});
BENCHMARK(BM_EditRound)->Arg(8)->Arg(64);
BENCHMARK(BM_MaskPipeline)->Arg(16)->Arg(64);
BENCHMARK(BM_SoftmaxAttention)->Arg(32)->Arg(128);

BENCHMARK_MAIN();
