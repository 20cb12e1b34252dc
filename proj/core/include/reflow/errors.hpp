#pragma once

#include <stdexcept>
#include <string>

namespace reflow {

/// Machine-parsable failure categories. The CLI prints the kebab-case
/// token from error_category() before the human-readable message.
enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    time_singularity,
    singular_covariance,
    unsupported_endpoints,
    step_out_of_range,
    non_finite_state,
    empty_targets,
    non_positive_lambda,
    window_out_of_range,
    empty_selection,
    inconsistent_sessions,
    config_error,
    io_error,
    shape_error,
};

const char* error_category(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const char* category() const noexcept { return error_category(code_); }

private:
    ErrorCode code_;
};

}  // namespace reflow
