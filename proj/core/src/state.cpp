#include "reflow/state.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace reflow {

namespace {

void check_finite(const std::vector<double>& values) {
    if (values.empty()) {
        throw Error(ErrorCode::invalid_argument, "StateVector requires dimension >= 1");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::non_finite_state, "StateVector entry is not finite");
        }
    }
}

}  // namespace

StateVector::StateVector(std::vector<double> values) : values_(std::move(values)) {
    check_finite(values_);
}

StateVector StateVector::zeros(int dim) {
    return StateVector(std::vector<double>(static_cast<std::size_t>(dim), 0.0));
}

StateVector StateVector::constant(int dim, double value) {
    return StateVector(std::vector<double>(static_cast<std::size_t>(dim), value));
}

void require_same_dim(const StateVector& a, const StateVector& b, const char* where) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::dimension_mismatch,
                    std::string(where) + ": dimensions " + std::to_string(a.dim()) +
                        " and " + std::to_string(b.dim()) + " differ");
    }
}

StateVector operator+(const StateVector& a, const StateVector& b) {
    require_same_dim(a, b, "operator+");
    std::vector<double> out(a.values());
    for (int i = 0; i < a.dim(); ++i) out[static_cast<std::size_t>(i)] += b[i];
    return StateVector(std::move(out));
}

StateVector operator-(const StateVector& a, const StateVector& b) {
    require_same_dim(a, b, "operator-");
    std::vector<double> out(a.values());
    for (int i = 0; i < a.dim(); ++i) out[static_cast<std::size_t>(i)] -= b[i];
    return StateVector(std::move(out));
}

StateVector operator*(const StateVector& a, double s) {
    std::vector<double> out(a.values());
    for (double& v : out) v *= s;
    return StateVector(std::move(out));
}

StateVector operator*(double s, const StateVector& a) { return a * s; }

double norm(const StateVector& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v * v;
    return std::sqrt(acc);
}

double distance(const StateVector& a, const StateVector& b) {
    require_same_dim(a, b, "distance");
    double acc = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

TimeGrid TimeGrid::uniform(int steps) {
    if (steps < 1) {
        throw Error(ErrorCode::invalid_argument, "TimeGrid requires steps >= 1");
    }
    std::vector<double> knots(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) {
        knots[static_cast<std::size_t>(k)] = static_cast<double>(k) / steps;
    }
    knots.front() = 0.0;
    knots.back() = 1.0;
    return TimeGrid(std::move(knots), true);
}

TimeGrid TimeGrid::custom(std::vector<double> knots) {
    if (knots.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "TimeGrid needs at least two knots");
    }
    if (knots.front() != 0.0 || knots.back() != 1.0) {
        throw Error(ErrorCode::invalid_argument, "TimeGrid knots must start at 0 and end at 1");
    }
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        if (!(knots[k] < knots[k + 1])) {
            throw Error(ErrorCode::invalid_argument, "TimeGrid knots must be strictly increasing");
        }
    }
    const int steps = static_cast<int>(knots.size()) - 1;
    const double target = 1.0 / steps;
    const double eps = std::numeric_limits<double>::epsilon();
    bool uniform = true;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        if (std::abs((knots[k + 1] - knots[k]) - target) > eps) {
            uniform = false;
            break;
        }
    }
    return TimeGrid(std::move(knots), uniform);
}

}  // namespace reflow
