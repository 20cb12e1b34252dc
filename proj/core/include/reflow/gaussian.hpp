#pragma once

#include <cstdint>
#include <vector>

#include "reflow/state.hpp"

namespace reflow {

/// Which end of the transport path a draw comes from.
enum class EndpointSide { source, noise };

/// Independent Gaussian endpoint distributions: source pi_0 = N(mu0, sigma0)
/// and noise pi_1 = N(mu1, sigma1). Covariances are dense row-major d x d,
/// validated symmetric (within 1e-12) and positive definite at construction.
/// Cholesky factors are cached for sampling; instances are immutable.
class GaussianEndpoints {
public:
    GaussianEndpoints(StateVector mu0, StateVector mu1,
                      std::vector<double> sigma0, std::vector<double> sigma1);

    /// Zero means, identity covariances.
    static GaussianEndpoints standard(int dim);

    int dim() const { return mu0_.dim(); }
    const StateVector& mu0() const { return mu0_; }
    const StateVector& mu1() const { return mu1_; }
    const std::vector<double>& sigma0() const { return sigma0_; }
    const std::vector<double>& sigma1() const { return sigma1_; }

    const StateVector& mean(EndpointSide side) const {
        return side == EndpointSide::source ? mu0_ : mu1_;
    }
    const std::vector<double>& cholesky(EndpointSide side) const {
        return side == EndpointSide::source ? chol0_ : chol1_;
    }

    bool zero_means() const;
    /// True when both covariances have exactly zero off-diagonal entries.
    bool diagonal_covariances() const;

private:
    StateVector mu0_;
    StateVector mu1_;
    std::vector<double> sigma0_;
    std::vector<double> sigma1_;
    std::vector<double> chol0_;  // lower-triangular factor, row-major
    std::vector<double> chol1_;
};

/// Seeded draw from the selected endpoint. The generator is std::mt19937_64
/// (bit-exact across platforms); standard normals come from a Box-Muller
/// transform on the engine's high 53 bits, so equal seeds reproduce equal
/// draws everywhere. The side tag is mixed into the seed so source and noise
/// draws at the same seed are distinct streams.
StateVector sample_endpoint(const GaussianEndpoints& ep, EndpointSide side, std::uint64_t seed);

/// Marginal velocity E[X1 - X0 | X_t = x] of the independent coupling:
///   (mu1 - mu0) + (t*sigma1 - (1-t)*sigma0) * Sigma_t^{-1} * (x - mu_t),
/// with Sigma_t = t^2*sigma1 + (1-t)^2*sigma0 and mu_t = t*mu1 + (1-t)*mu0.
StateVector gaussian_marginal_velocity(const StateVector& x, double t, const GaussianEndpoints& ep);

/// Closed-form flow of gaussian_marginal_velocity for zero-mean diagonal
/// endpoints, applied per axis:
///   x0 * sqrt(t^2*var1 + (1-t)^2*var0) / sqrt(var0).
/// Throws unsupported_endpoints otherwise.
StateVector exact_gaussian_trajectory(const StateVector& x0, double t, const GaussianEndpoints& ep);

}  // namespace reflow
