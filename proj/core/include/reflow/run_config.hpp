#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reflow/attnmask.hpp"
#include "reflow/gaussian.hpp"
#include "reflow/guidance.hpp"
#include "reflow/multiturn.hpp"
#include "reflow/solvers.hpp"

namespace reflow {

// Flat key=value config text with [section] headers. '#' and ';' start comment
// lines; keys are unique per section.
struct ParsedConfig {
    using Section = std::vector<std::pair<std::string, std::string>>;

    std::vector<std::pair<std::string, Section>> sections;

    const Section* find(const std::string& name) const;
};

ParsedConfig parse_config_text(const std::string& text, const std::string& origin);

enum class FieldChoice {
    gaussian,
    constant,
};

struct MaskRunConfig {
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> next_manifest;
    MaskParams params;
    bool write_modulated = false;
};

// One multiturn comparison arm; [profile:NAME] sections override the base values.
struct ProfileConfig {
    std::string name;
    SolverKind solver;
    int steps;
    GuidanceConfig guidance;
    int invert_guided_steps;
    std::optional<StateVector> edit_delta;
};

struct RunConfig {
    std::string experiment;  // empty unless the config pins one
    int dim = 1;
    int steps = 15;
    SolverKind solver = SolverKind::midpoint;
    std::vector<SolverKind> solvers = {SolverKind::euler, SolverKind::midpoint,
                                       SolverKind::midpoint_cached};
    int rounds = 8;
    std::vector<std::uint64_t> seeds = {1};
    std::vector<int> n_list = {8, 16, 32, 64};
    std::vector<double> lambda_ladder = {1e2, 1e3, 1e4, 1e5};
    std::vector<int> target_counts = {2, 3, 5};
    int control_samples = 50;
    std::optional<StateVector> x0;
    FieldChoice field = FieldChoice::gaussian;
    std::optional<StateVector> constant_velocity;

    GuidanceConfig guidance;
    int invert_guided_steps = -1;
    std::optional<StateVector> edit_delta;

    std::optional<GaussianEndpoints> endpoints;
    std::optional<MaskRunConfig> mask;
    std::vector<ProfileConfig> profiles;

    // Loads and validates; relative paths resolve against the config's directory,
    // and referenced files must exist. `expected_experiment` cross-checks the
    // config's experiment key when both are set.
    static RunConfig load(const std::filesystem::path& path,
                          const std::string& expected_experiment = "");

    GaussianEndpoints endpoints_or_standard() const;
    StateVector start_state() const;  // x0 or all-ones at dim
    // Base profile plus any [profile:NAME] overrides, in file order.
    std::vector<ProfileConfig> effective_profiles() const;
};

}  // namespace reflow
