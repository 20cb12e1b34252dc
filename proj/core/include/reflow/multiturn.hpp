#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reflow/gaussian.hpp"
#include "reflow/guidance.hpp"
#include "reflow/solvers.hpp"
#include "reflow/state.hpp"
#include "reflow/velocity_field.hpp"

namespace reflow {

struct SessionConfig {
    SolverKind solver = SolverKind::midpoint;
    TimeGrid grid = TimeGrid::uniform(15);
    GuidanceConfig guidance;
    // Guidance gate for the inversion pass; -1 mirrors guidance.guided_steps.
    int invert_guided_steps = -1;
    std::uint64_t seed = 0;
    // Added to the previous output inside the dual target only, modeling an edit
    // request without changing what gets inverted.
    std::optional<StateVector> edit_delta;
    std::string label = "default";
};

struct RoundRecord {
    int round_index;
    StateVector noise_state;
    StateVector output;
    double drift_to_source;
    double drift_to_prev;
    long field_evals;
};

// One invert/sample editing loop. Rounds are sequential and append-only; the noise
// anchor for inversion guidance is drawn once at construction and held fixed.
class EditSession {
public:
    EditSession(StateVector source, StateVector noise_anchor, VelocityField field,
                SessionConfig config);

    // Draws the source from the t=0 endpoint and the noise anchor from the t=1
    // endpoint at config.seed, and drives the endpoint pair's marginal field.
    static EditSession from_endpoints(const GaussianEndpoints& endpoints, SessionConfig config);

    // Inverts the previous round's output (round 1: the source) to t=1, samples back
    // with the dual target, appends the record.
    const RoundRecord& run_round();

    // Appends `rounds` rounds and returns the full history.
    const std::vector<RoundRecord>& run_session(int rounds);

    const StateVector& source() const { return source_; }
    const StateVector& noise_anchor() const { return noise_anchor_; }
    const SessionConfig& config() const { return config_; }
    const std::vector<RoundRecord>& rounds() const { return rounds_; }

private:
    StateVector source_;
    StateVector noise_anchor_;
    VelocityField field_;
    SessionConfig config_;
    std::vector<RoundRecord> rounds_;
};

// Per-round drift table across sessions, one row per (session, round):
// config,round,drift_to_source,drift_to_prev,field_evals
// Sessions must agree in dimension and round count.
std::string drift_report(const std::vector<EditSession>& sessions);

}  // namespace reflow
