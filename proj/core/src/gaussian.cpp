#include "reflow/gaussian.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <string>

namespace reflow {

namespace {

using MatrixMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

MatrixMap as_matrix(const std::vector<double>& m, int d) {
    return MatrixMap(m.data(), d, d);
}

void validate_spd(const std::vector<double>& m, int d, const char* name) {
    if (static_cast<int>(m.size()) != d * d) {
        throw Error(ErrorCode::dimension_mismatch,
                    std::string(name) + ": covariance must hold d*d entries");
    }
    auto mat = as_matrix(m, d);
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            if (std::abs(mat(i, j) - mat(j, i)) > 1e-12) {
                throw Error(ErrorCode::singular_covariance,
                            std::string(name) + ": covariance is not symmetric");
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mat);
    if (solver.info() != Eigen::Success || solver.eigenvalues().minCoeff() <= 0.0) {
        throw Error(ErrorCode::singular_covariance,
                    std::string(name) + ": covariance is not positive definite");
    }
}

std::vector<double> lower_cholesky(const std::vector<double>& m, int d) {
    Eigen::LLT<Eigen::MatrixXd> llt(as_matrix(m, d));
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::singular_covariance, "Cholesky factorization failed");
    }
    Eigen::MatrixXd lower = llt.matrixL();
    std::vector<double> out(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            out[static_cast<std::size_t>(i) * d + j] = lower(i, j);
        }
    }
    return out;
}

// 53-bit uniform in (0,1]; keeps log() finite in the Box-Muller radius.
double unit_open_closed(std::mt19937_64& gen) {
    return static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

GaussianEndpoints::GaussianEndpoints(StateVector mu0, StateVector mu1,
                                     std::vector<double> sigma0, std::vector<double> sigma1)
    : mu0_(std::move(mu0)),
      mu1_(std::move(mu1)),
      sigma0_(std::move(sigma0)),
      sigma1_(std::move(sigma1)) {
    require_same_dim(mu0_, mu1_, "GaussianEndpoints");
    validate_spd(sigma0_, dim(), "sigma0");
    validate_spd(sigma1_, dim(), "sigma1");
    chol0_ = lower_cholesky(sigma0_, dim());
    chol1_ = lower_cholesky(sigma1_, dim());
}

GaussianEndpoints GaussianEndpoints::standard(int dim) {
    std::vector<double> identity(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) identity[static_cast<std::size_t>(i) * dim + i] = 1.0;
    return GaussianEndpoints(StateVector::zeros(dim), StateVector::zeros(dim), identity, identity);
}

bool GaussianEndpoints::zero_means() const {
    for (int i = 0; i < dim(); ++i) {
        if (mu0_[i] != 0.0 || mu1_[i] != 0.0) return false;
    }
    return true;
}

bool GaussianEndpoints::diagonal_covariances() const {
    const int d = dim();
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            if (sigma0_[static_cast<std::size_t>(i) * d + j] != 0.0 ||
                sigma1_[static_cast<std::size_t>(i) * d + j] != 0.0) {
                return false;
            }
        }
    }
    return true;
}

StateVector sample_endpoint(const GaussianEndpoints& ep, EndpointSide side, std::uint64_t seed) {
    // Distinct stream per side at equal seeds.
    const std::uint64_t tag = side == EndpointSide::noise ? 0x9e3779b97f4a7c15ull : 0ull;
    std::mt19937_64 gen(seed ^ tag);

    const int d = ep.dim();
    std::vector<double> z(static_cast<std::size_t>(d));
    for (int i = 0; i < d; i += 2) {
        const double u1 = unit_open_closed(gen);
        const double u2 = unit_open_closed(gen);
        const double r = std::sqrt(-2.0 * std::log(u1));
        z[static_cast<std::size_t>(i)] = r * std::cos(kTwoPi * u2);
        if (i + 1 < d) z[static_cast<std::size_t>(i) + 1] = r * std::sin(kTwoPi * u2);
    }

    const StateVector& mu = ep.mean(side);
    const std::vector<double>& lower = ep.cholesky(side);
    std::vector<double> out(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        double acc = mu[i];
        for (int j = 0; j <= i; ++j) {
            acc += lower[static_cast<std::size_t>(i) * d + j] * z[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return StateVector(std::move(out));
}

StateVector gaussian_marginal_velocity(const StateVector& x, double t, const GaussianEndpoints& ep) {
    const int d = ep.dim();
    require_same_dim(x, ep.mu0(), "gaussian_marginal_velocity");

    auto s0 = as_matrix(ep.sigma0(), d);
    auto s1 = as_matrix(ep.sigma1(), d);
    const double a = 1.0 - t;

    Eigen::MatrixXd sigma_t = (t * t) * s1 + (a * a) * s0;
    Eigen::VectorXd centered(d);
    for (int i = 0; i < d; ++i) {
        centered(i) = x[i] - (t * ep.mu1()[i] + a * ep.mu0()[i]);
    }

    Eigen::LLT<Eigen::MatrixXd> llt(sigma_t);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::singular_covariance, "Sigma_t is not invertible");
    }
    Eigen::VectorXd solved = llt.solve(centered);
    Eigen::VectorXd affine = (t * s1 - a * s0) * solved;

    std::vector<double> out(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        out[static_cast<std::size_t>(i)] = (ep.mu1()[i] - ep.mu0()[i]) + affine(i);
    }
    return StateVector(std::move(out));
}

StateVector exact_gaussian_trajectory(const StateVector& x0, double t, const GaussianEndpoints& ep) {
    if (!ep.zero_means()) {
        throw Error(ErrorCode::unsupported_endpoints,
                    "closed-form trajectory requires zero-mean endpoints");
    }
    if (!ep.diagonal_covariances()) {
        throw Error(ErrorCode::unsupported_endpoints,
                    "closed-form trajectory requires diagonal covariances");
    }
    const int d = ep.dim();
    require_same_dim(x0, ep.mu0(), "exact_gaussian_trajectory");

    const double a = 1.0 - t;
    std::vector<double> out(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const double var0 = ep.sigma0()[static_cast<std::size_t>(i) * d + i];
        const double var1 = ep.sigma1()[static_cast<std::size_t>(i) * d + i];
        out[static_cast<std::size_t>(i)] =
            x0[i] * std::sqrt(t * t * var1 + a * a * var0) / std::sqrt(var0);
    }
    return StateVector(std::move(out));
}

}  // namespace reflow
