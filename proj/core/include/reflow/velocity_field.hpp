#pragma once

#include <memory>
#include <variant>

#include "reflow/gaussian.hpp"
#include "reflow/state.hpp"

namespace reflow {

// Times closer than this to a conditional field's singular end are rejected.
inline constexpr double kTimeEps = 1e-6;

// Which end of the unit clock a conditional field steers toward.
enum class AnchorEnd {
    time_one,
    time_zero,
};

// Straight-path conditional velocity toward `target`.
//
// Anchored at t=1 the field is (target - x) / (1 - t), defined for t < 1 - kTimeEps.
// Anchored at t=0 it is (x - target) / t, defined for t > kTimeEps; integrating it
// backward in time lands exactly on `target` at t=0 for any step size.
StateVector conditional_velocity(const StateVector& x, double t, const StateVector& target,
                                 AnchorEnd end);

// Value-semantic velocity field v(x, t).
class VelocityField {
public:
    static VelocityField constant(StateVector velocity);
    static VelocityField conditional(StateVector target, AnchorEnd end);
    static VelocityField gaussian_marginal(GaussianEndpoints endpoints);

    // base + eta * (conditional(anchor) - base).
    //
    // eta == 0 returns the base velocity bitwise unchanged; eta == 1 returns the
    // conditional velocity bitwise, so the blend never perturbs the pure cases.
    static VelocityField guided(VelocityField base, StateVector anchor, double eta,
                                AnchorEnd end);

    StateVector eval(const StateVector& x, double t) const;
    int dim() const;

private:
    struct Constant {
        StateVector velocity;
    };
    struct Conditional {
        StateVector target;
        AnchorEnd end;
    };
    struct Marginal {
        GaussianEndpoints endpoints;
    };
    struct Guided {
        std::shared_ptr<const VelocityField> base;
        StateVector anchor;
        double eta;
        AnchorEnd end;
    };

    using Impl = std::variant<Constant, Conditional, Marginal, Guided>;

    explicit VelocityField(Impl impl) : impl_(std::move(impl)) {}

    Impl impl_;
};

}  // namespace reflow
