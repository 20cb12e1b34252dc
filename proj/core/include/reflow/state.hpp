#pragma once

#include <cstddef>
#include <vector>

#include "reflow/errors.hpp"

namespace reflow {

/// A point in d-dimensional latent space. Entries are always finite;
/// construction rejects NaN/Inf and d == 0. Immutable value type apart
/// from whole-vector assignment.
class StateVector {
public:
    explicit StateVector(std::vector<double> values);

    static StateVector zeros(int dim);
    static StateVector constant(int dim, double value);

    int dim() const { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const StateVector& other) const { return values_ == other.values_; }

private:
    std::vector<double> values_;
};

StateVector operator+(const StateVector& a, const StateVector& b);
StateVector operator-(const StateVector& a, const StateVector& b);
StateVector operator*(const StateVector& a, double s);
StateVector operator*(double s, const StateVector& a);

/// Euclidean norm and distance.
double norm(const StateVector& a);
double distance(const StateVector& a, const StateVector& b);

/// Throws dimension_mismatch unless a and b have equal dimension.
void require_same_dim(const StateVector& a, const StateVector& b, const char* where);

/// Partition of [0,1] into `steps` intervals: knots t_0 = 0 < ... < t_N = 1.
class TimeGrid {
public:
    static TimeGrid uniform(int steps);
    /// Validates endpoints and monotonicity; the uniform flag is detected
    /// (every gap within one machine epsilon of 1/N).
    static TimeGrid custom(std::vector<double> knots);

    int steps() const { return static_cast<int>(knots_.size()) - 1; }
    const std::vector<double>& knots() const { return knots_; }
    double knot(int k) const { return knots_[static_cast<std::size_t>(k)]; }
    bool uniform() const { return uniform_; }

private:
    TimeGrid(std::vector<double> knots, bool uniform)
        : knots_(std::move(knots)), uniform_(uniform) {}

    std::vector<double> knots_;
    bool uniform_;
};

}  // namespace reflow
