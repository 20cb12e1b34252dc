#include "reflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "reflow/attn_io.hpp"
#include "reflow/csv_format.hpp"

namespace reflow {

namespace {

// Deterministic stream of uniforms/normals; the same generator family the endpoint
// sampler documents, so draws reproduce across platforms.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }

    double normal() {
        if (spare_) {
            const double value = *spare_;
            spare_.reset();
            return value;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(two_pi * u2);
        return r * std::cos(two_pi * u2);
    }

    StateVector normal_state(int dim) {
        std::vector<double> values(static_cast<std::size_t>(dim));
        for (double& v : values) v = normal();
        return StateVector(std::move(values));
    }

private:
    std::mt19937_64 gen_;
    std::optional<double> spare_;
};

std::string join_ints(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

std::string join_seeds(const std::vector<std::uint64_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

std::string join_solvers(const std::vector<SolverKind>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += to_string(values[i]);
    }
    return out;
}

std::string profile_echo(const ProfileConfig& profile) {
    std::string line = "# profile ";
    line += profile.name;
    line += ": solver=";
    line += to_string(profile.solver);
    line += " steps=" + std::to_string(profile.steps);
    line += " eta=" + format_brief(profile.guidance.eta);
    line += " lambda_mix=" + format_brief(profile.guidance.lambda_mix);
    line += " guided_steps=" + std::to_string(profile.guidance.guided_steps);
    if (profile.edit_delta) line += " edit_delta=yes";
    line += '\n';
    return line;
}

VelocityField field_for(const RunConfig& config, const GaussianEndpoints& endpoints) {
    if (config.field == FieldChoice::constant) {
        StateVector v = config.constant_velocity ? *config.constant_velocity
                                                 : StateVector::zeros(config.dim);
        return VelocityField::constant(std::move(v));
    }
    return VelocityField::gaussian_marginal(endpoints);
}

}  // namespace

int resolve_worker_count(int jobs) {
    if (jobs <= 1) return jobs < 1 ? 1 : jobs;
    int cap = 0;
    if (const char* env = std::getenv("REFLOW_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && parsed >= 1) {
            cap = static_cast<int>(parsed);
        }
    }
    if (cap < 1) {
        const unsigned hw = std::thread::hardware_concurrency();
        cap = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return std::min(jobs, cap);
}

OutputBundle run_order(const RunConfig& config) {
    if (config.n_list.size() < 3) {
        throw Error(ErrorCode::config_error, "order needs at least three n_list entries");
    }
    const GaussianEndpoints endpoints = config.endpoints_or_standard();
    const VelocityField field = field_for(config, endpoints);
    const StateVector x0 = config.start_state();
    const StateVector exact = config.field == FieldChoice::constant
                                  ? x0 + (config.constant_velocity
                                              ? *config.constant_velocity
                                              : StateVector::zeros(config.dim))
                                  : exact_gaussian_trajectory(x0, 1.0, endpoints);

    std::string csv = "# reflow order\n";
    csv += "# dim=" + std::to_string(config.dim) +
           " field=" + (config.field == FieldChoice::constant ? "constant" : "gaussian") +
           " n_list=" + join_ints(config.n_list) + " solvers=" + join_solvers(config.solvers) +
           '\n';
    csv += "solver,N,error,field_evals,slope\n";
    for (SolverKind solver : config.solvers) {
        OrderFit fit =
            convergence_order(x0, exact, Direction::forward, solver, field, config.n_list);
        const std::string slope = fit.exact() ? "exact" : format_full(*fit.slope);
        for (const OrderPoint& point : fit.points) {
            csv += to_string(solver);
            csv += ',' + std::to_string(point.steps);
            csv += ',' + format_full(point.error);
            csv += ',' + std::to_string(point.field_evals);
            csv += ',' + slope + '\n';
        }
    }
    return OutputBundle{{"order.csv", std::move(csv)}};
}

OutputBundle run_roundtrip(const RunConfig& config) {
    const GaussianEndpoints endpoints = config.endpoints_or_standard();
    const VelocityField field = field_for(config, endpoints);
    const TimeGrid grid = TimeGrid::uniform(config.steps);

    std::string csv = "# reflow roundtrip\n";
    csv += "# dim=" + std::to_string(config.dim) + " steps=" + std::to_string(config.steps) +
           " seeds=" + join_seeds(config.seeds) + " solvers=" + join_solvers(config.solvers) +
           '\n';
    csv += "solver,N,seed,recon_error,field_evals\n";
    for (SolverKind solver : config.solvers) {
        for (std::uint64_t seed : config.seeds) {
            const StateVector x0 = sample_endpoint(endpoints, EndpointSide::source, seed);
            Trajectory inversion =
                run_trajectory(x0, grid, Direction::forward, solver, field);
            Trajectory sampling = run_trajectory(inversion.endpoint(), grid,
                                                 Direction::reverse, solver, field);
            csv += to_string(solver);
            csv += ',' + std::to_string(config.steps);
            csv += ',' + std::to_string(seed);
            csv += ',' + format_full(distance(sampling.endpoint(), x0));
            csv += ',' + std::to_string(inversion.field_evals + sampling.field_evals);
            csv += '\n';
        }
    }
    return OutputBundle{{"roundtrip.csv", std::move(csv)}};
}

OutputBundle run_multiturn(const RunConfig& config) {
    const GaussianEndpoints endpoints = config.endpoints_or_standard();
    const std::vector<ProfileConfig> profiles = config.effective_profiles();

    struct Job {
        ProfileConfig profile;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const ProfileConfig& profile : profiles) {
        for (std::uint64_t seed : config.seeds) {
            jobs.push_back(Job{profile, seed});
        }
    }

    std::vector<std::optional<EditSession>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (;;) {
            const std::size_t index = next.fetch_add(1);
            if (index >= jobs.size()) return;
            try {
                const Job& job = jobs[index];
                SessionConfig session_config;
                session_config.solver = job.profile.solver;
                session_config.grid = TimeGrid::uniform(job.profile.steps);
                session_config.guidance = job.profile.guidance;
                session_config.invert_guided_steps = job.profile.invert_guided_steps;
                session_config.seed = job.seed;
                session_config.edit_delta = job.profile.edit_delta;
                session_config.label = job.profile.name + ".seed" + std::to_string(job.seed);
                EditSession session =
                    EditSession::from_endpoints(endpoints, std::move(session_config));
                session.run_session(config.rounds);
                results[index].emplace(std::move(session));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int workers = resolve_worker_count(static_cast<int>(jobs.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<EditSession> sessions;
    sessions.reserve(results.size());
    for (std::optional<EditSession>& slot : results) {
        sessions.push_back(std::move(*slot));
    }

    std::string header = "# reflow multiturn\n";
    header += "# dim=" + std::to_string(config.dim) + " rounds=" + std::to_string(config.rounds) +
              " seeds=" + join_seeds(config.seeds) + '\n';
    for (const ProfileConfig& profile : profiles) header += profile_echo(profile);

    std::string drift = header + drift_report(sessions);

    std::string summary = header;
    summary += "config,seeds,rounds,mean_final_drift_to_source,mean_final_drift_to_prev\n";
    const std::size_t per_profile = config.seeds.size();
    for (std::size_t p = 0; p < profiles.size(); ++p) {
        double source_acc = 0.0;
        double prev_acc = 0.0;
        for (std::size_t s = 0; s < per_profile; ++s) {
            const EditSession& session = sessions[p * per_profile + s];
            source_acc += session.rounds().back().drift_to_source;
            prev_acc += session.rounds().back().drift_to_prev;
        }
        summary += profiles[p].name;
        summary += ',' + std::to_string(per_profile);
        summary += ',' + std::to_string(config.rounds);
        summary += ',' + format_brief(source_acc / static_cast<double>(per_profile));
        summary += ',' + format_brief(prev_acc / static_cast<double>(per_profile));
        summary += '\n';
    }

    return OutputBundle{{"drift.csv", std::move(drift)}, {"summary.csv", std::move(summary)}};
}

OutputBundle run_prop1(const RunConfig& config) {
    const TimeGrid grid = TimeGrid::uniform(config.steps);

    std::string csv = "# reflow prop1\n";
    csv += "# dim=" + std::to_string(config.dim) + " steps=" + std::to_string(config.steps) +
           " control_samples=" + std::to_string(config.control_samples) + '\n';
    csv += "n_targets,seed,gap,objective_spread\n";

    auto emit_row = [&](int n_targets, std::uint64_t seed, const LqrProblem& problem,
                        Prng& prng) {
        const Prop1Report report = verify_proposition1(problem);
        const TargetSummary summary = weighted_target(problem.targets);
        const LqrProblem reduced{problem.z0,
                                 {WeightedTarget{summary.mean, summary.total_weight}},
                                 problem.grid};

        double min_diff = 0.0;
        double max_diff = 0.0;
        double sum_diff = 0.0;
        for (int s = 0; s < config.control_samples; ++s) {
            std::vector<StateVector> controls;
            controls.reserve(static_cast<std::size_t>(grid.steps()));
            for (int k = 0; k < grid.steps(); ++k) {
                controls.push_back(prng.normal_state(config.dim));
            }
            const double diff = lqr_objective(controls, problem) - lqr_objective(controls, reduced);
            if (s == 0) {
                min_diff = max_diff = diff;
            } else {
                min_diff = std::min(min_diff, diff);
                max_diff = std::max(max_diff, diff);
            }
            sum_diff += diff;
        }
        const double mean_diff = sum_diff / config.control_samples;
        const double denom = std::max(std::abs(mean_diff), 1e-30);
        const double spread = (max_diff - min_diff) / denom;

        csv += std::to_string(n_targets);
        csv += ',' + std::to_string(seed);
        csv += ',' + format_full(report.gap);
        csv += ',' + format_full(spread);
        csv += '\n';
    };

    if (config.guidance.targets.size() >= 2) {
        std::vector<WeightedTarget> targets;
        for (const StateVector& x : config.guidance.targets) {
            targets.push_back(WeightedTarget{x, 1.0});
        }
        Prng prng(config.seeds.front());
        const LqrProblem problem{config.start_state(), targets, grid};
        emit_row(static_cast<int>(targets.size()), config.seeds.front(), problem, prng);
    } else {
        for (std::uint64_t seed : config.seeds) {
            for (int n : config.target_counts) {
                Prng prng(seed * 1000003ull + static_cast<std::uint64_t>(n));
                std::vector<WeightedTarget> targets;
                targets.reserve(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) {
                    StateVector x = prng.normal_state(config.dim);
                    const double weight = 0.5 + 2.0 * prng.uniform();
                    targets.push_back(WeightedTarget{std::move(x), weight});
                }
                const LqrProblem problem{prng.normal_state(config.dim), std::move(targets),
                                         grid};
                emit_row(n, seed, problem, prng);
            }
        }
    }
    return OutputBundle{{"prop1.csv", std::move(csv)}};
}

OutputBundle run_lqr_limit(const RunConfig& config) {
    if (config.lambda_ladder.size() < 3) {
        throw Error(ErrorCode::config_error,
                    "lqr-limit needs at least three lambda_ladder entries");
    }
    const StateVector z = config.x0 ? *config.x0 : StateVector::zeros(config.dim);
    const StateVector target = config.guidance.targets.empty()
                                   ? StateVector::constant(config.dim, 1.0)
                                   : config.guidance.targets.front();
    const double t = 0.5;

    const StateVector limit = optimal_control_closed_form(z, t, target);
    std::vector<double> errors;
    errors.reserve(config.lambda_ladder.size());
    for (double lam : config.lambda_ladder) {
        errors.push_back(distance(finite_lambda_control(z, t, target, lam), limit));
    }

    // log-log fit of error against lambda
    std::optional<double> slope;
    {
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (errors[i] < 1e-300) continue;
            xs.push_back(std::log(config.lambda_ladder[i]));
            ys.push_back(std::log(errors[i]));
        }
        if (xs.size() >= 2) {
            const double n = static_cast<double>(xs.size());
            double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sx += xs[i];
                sy += ys[i];
                sxx += xs[i] * xs[i];
                sxy += xs[i] * ys[i];
            }
            slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        }
    }

    std::string csv = "# reflow lqr-limit\n";
    csv += "# dim=" + std::to_string(config.dim) + " eval_time=" + format_brief(t) + '\n';
    csv += "lambda,error,slope\n";
    const std::string slope_cell = slope ? format_full(*slope) : "exact";
    for (std::size_t i = 0; i < errors.size(); ++i) {
        csv += format_full(config.lambda_ladder[i]);
        csv += ',' + format_full(errors[i]);
        csv += ',' + slope_cell + '\n';
    }
    return OutputBundle{{"lqr_limit.csv", std::move(csv)}};
}

OutputBundle run_mask(const RunConfig& config) {
    if (!config.mask) {
        throw Error(ErrorCode::config_error, "mask experiment needs a [mask] section");
    }
    const MaskRunConfig& mask_config = *config.mask;
    const AttentionStack stack = load_stack_manifest(mask_config.manifest);
    const AttentionStack next = mask_config.next_manifest
                                    ? load_stack_manifest(*mask_config.next_manifest)
                                    : stack;
    const PipelineResult result = pipeline(stack, mask_config.params, next);

    OutputBundle bundle;
    bundle["mask.csv"] = mask_csv_string(result.mask);

    std::string summary = "# reflow mask\n";
    summary += "# window_lo=" + std::to_string(mask_config.params.window_lo) +
               " window_hi=" + std::to_string(mask_config.params.window_hi) +
               " tau=" + format_brief(mask_config.params.tau) +
               " h_factor=" + format_brief(mask_config.params.h_factor) +
               " r_factor=" + format_brief(mask_config.params.r_factor) +
               " rank_on_raw=" + (mask_config.params.rank_on_raw ? "true" : "false") + '\n';
    summary += "h_count,r_count,total\n";
    summary += std::to_string(result.mask.h_count());
    summary += ',' + std::to_string(result.mask.r_count());
    summary += ',' + std::to_string(result.mask.height * result.mask.width) + '\n';
    bundle["mask_summary.csv"] = std::move(summary);

    if (mask_config.write_modulated) {
        for (int i = 0; i < result.modulated.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "modulated_%02d.csv", i);
            bundle[name] =
                map_csv_string(result.modulated.maps()[static_cast<std::size_t>(i)]);
        }
    }
    return bundle;
}

OutputBundle run_experiment(const std::string& name, const RunConfig& config) {
    if (name == "order") return run_order(config);
    if (name == "roundtrip") return run_roundtrip(config);
    if (name == "multiturn") return run_multiturn(config);
    if (name == "prop1") return run_prop1(config);
    if (name == "lqr-limit") return run_lqr_limit(config);
    if (name == "mask") return run_mask(config);
    throw Error(ErrorCode::invalid_argument, "unknown experiment '" + name + "'");
}

}  // namespace reflow
