#include "reflow/velocity_field.hpp"

#include <cmath>
#include <utility>

namespace reflow {

StateVector conditional_velocity(const StateVector& x, double t, const StateVector& target,
                                 AnchorEnd end) {
    require_same_dim(x, target, "conditional_velocity");
    if (!std::isfinite(t)) {
        throw Error(ErrorCode::invalid_argument, "conditional_velocity: time is not finite");
    }
    if (end == AnchorEnd::time_one) {
        if (t >= 1.0 - kTimeEps) {
            throw Error(ErrorCode::time_singularity,
                        "conditional field anchored at t=1 is singular near t=1");
        }
        return (target - x) * (1.0 / (1.0 - t));
    }
    if (t <= kTimeEps) {
        throw Error(ErrorCode::time_singularity,
                    "conditional field anchored at t=0 is singular near t=0");
    }
    return (x - target) * (1.0 / t);
}

VelocityField VelocityField::constant(StateVector velocity) {
    return VelocityField(Impl(Constant{std::move(velocity)}));
}

VelocityField VelocityField::conditional(StateVector target, AnchorEnd end) {
    return VelocityField(Impl(Conditional{std::move(target), end}));
}

VelocityField VelocityField::gaussian_marginal(GaussianEndpoints endpoints) {
    return VelocityField(Impl(Marginal{std::move(endpoints)}));
}

VelocityField VelocityField::guided(VelocityField base, StateVector anchor, double eta,
                                    AnchorEnd end) {
    if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0) {
        throw Error(ErrorCode::invalid_argument, "guidance strength must lie in [0, 1]");
    }
    if (base.dim() != anchor.dim()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "guided field: anchor dimension differs from base field");
    }
    auto shared = std::make_shared<const VelocityField>(std::move(base));
    return VelocityField(Impl(Guided{std::move(shared), std::move(anchor), eta, end}));
}

StateVector VelocityField::eval(const StateVector& x, double t) const {
    return std::visit(
        [&](const auto& impl) -> StateVector {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Constant>) {
                require_same_dim(x, impl.velocity, "VelocityField::eval");
                return impl.velocity;
            } else if constexpr (std::is_same_v<T, Conditional>) {
                return conditional_velocity(x, t, impl.target, impl.end);
            } else if constexpr (std::is_same_v<T, Marginal>) {
                return gaussian_marginal_velocity(x, t, impl.endpoints);
            } else {
                if (impl.eta == 0.0) return impl.base->eval(x, t);
                if (impl.eta == 1.0) return conditional_velocity(x, t, impl.anchor, impl.end);
                StateVector base = impl.base->eval(x, t);
                StateVector cond = conditional_velocity(x, t, impl.anchor, impl.end);
                return base + (cond - base) * impl.eta;
            }
        },
        impl_);
}

int VelocityField::dim() const {
    return std::visit(
        [](const auto& impl) -> int {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return impl.velocity.dim();
            } else if constexpr (std::is_same_v<T, Conditional>) {
                return impl.target.dim();
            } else if constexpr (std::is_same_v<T, Marginal>) {
                return impl.endpoints.dim();
            } else {
                return impl.base->dim();
            }
        },
        impl_);
}

}  // namespace reflow
