#include "reflow/multiturn.hpp"

#include <utility>

#include "reflow/csv_format.hpp"

namespace reflow {

EditSession::EditSession(StateVector source, StateVector noise_anchor, VelocityField field,
                         SessionConfig config)
    : source_(std::move(source)),
      noise_anchor_(std::move(noise_anchor)),
      field_(std::move(field)),
      config_(std::move(config)) {
    require_same_dim(source_, noise_anchor_, "EditSession");
    if (field_.dim() != source_.dim()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "EditSession: field dimension differs from source");
    }
    config_.guidance.validate();
    if (config_.edit_delta) {
        require_same_dim(*config_.edit_delta, source_, "EditSession");
    }
}

EditSession EditSession::from_endpoints(const GaussianEndpoints& endpoints,
                                        SessionConfig config) {
    StateVector source = sample_endpoint(endpoints, EndpointSide::source, config.seed);
    StateVector anchor = sample_endpoint(endpoints, EndpointSide::noise, config.seed);
    return EditSession(std::move(source), std::move(anchor),
                       VelocityField::gaussian_marginal(endpoints), std::move(config));
}

const RoundRecord& EditSession::run_round() {
    const StateVector& x_in = rounds_.empty() ? source_ : rounds_.back().output;
    const GuidanceConfig& g = config_.guidance;
    const int invert_gate =
        config_.invert_guided_steps < 0 ? g.guided_steps : config_.invert_guided_steps;

    Trajectory inversion = guided_inversion(x_in, noise_anchor_, config_.grid, config_.solver,
                                            field_, g.eta, invert_gate);

    StateVector x_prev = config_.edit_delta ? x_in + *config_.edit_delta : x_in;
    Trajectory sampling =
        dual_guided_sampling(inversion.endpoint(), source_, x_prev, config_.grid,
                             config_.solver, field_, g.eta, g.lambda_mix, g.guided_steps);

    const StateVector& output = sampling.endpoint();
    rounds_.push_back(RoundRecord{
        static_cast<int>(rounds_.size()) + 1,
        inversion.endpoint(),
        output,
        distance(output, source_),
        distance(output, x_in),
        inversion.field_evals + sampling.field_evals,
    });
    return rounds_.back();
}

const std::vector<RoundRecord>& EditSession::run_session(int rounds) {
    if (rounds < 1) {
        throw Error(ErrorCode::invalid_argument, "session needs at least one round");
    }
    for (int k = 0; k < rounds; ++k) run_round();
    return rounds_;
}

std::string drift_report(const std::vector<EditSession>& sessions) {
    if (sessions.empty()) {
        throw Error(ErrorCode::inconsistent_sessions, "drift report needs at least one session");
    }
    const int dim = sessions.front().source().dim();
    const std::size_t round_count = sessions.front().rounds().size();
    for (const EditSession& session : sessions) {
        if (session.source().dim() != dim) {
            throw Error(ErrorCode::inconsistent_sessions,
                        "sessions disagree on state dimension");
        }
        if (session.rounds().size() != round_count) {
            throw Error(ErrorCode::inconsistent_sessions, "sessions disagree on round count");
        }
    }

    std::string out = "config,round,drift_to_source,drift_to_prev,field_evals\n";
    for (const EditSession& session : sessions) {
        for (const RoundRecord& record : session.rounds()) {
            out += session.config().label;
            out += ',';
            out += std::to_string(record.round_index);
            out += ',';
            out += format_full(record.drift_to_source);
            out += ',';
            out += format_full(record.drift_to_prev);
            out += ',';
            out += std::to_string(record.field_evals);
            out += '\n';
        }
    }
    return out;
}

}  // namespace reflow
