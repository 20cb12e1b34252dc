#include "reflow/errors.hpp"

namespace reflow {

const char* error_category(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::dimension_mismatch: return "dimension-mismatch";
        case ErrorCode::time_singularity: return "time-singularity";
        case ErrorCode::singular_covariance: return "singular-covariance";
        case ErrorCode::unsupported_endpoints: return "unsupported-endpoints";
        case ErrorCode::step_out_of_range: return "step-out-of-range";
        case ErrorCode::non_finite_state: return "non-finite-state";
        case ErrorCode::empty_targets: return "empty-targets";
        case ErrorCode::non_positive_lambda: return "non-positive-lambda";
        case ErrorCode::window_out_of_range: return "window-out-of-range";
        case ErrorCode::empty_selection: return "empty-selection";
        case ErrorCode::inconsistent_sessions: return "inconsistent-sessions";
        case ErrorCode::config_error: return "config-error";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::shape_error: return "shape-error";
    }
    return "unknown";
}

}  // namespace reflow
