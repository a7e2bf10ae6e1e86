#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

#include "epochsim/errors.hpp"

namespace epochsim {

using ObjectId = std::uint32_t;
using WorkerId = std::uint32_t;
using NodeId = std::uint32_t;

/// Simulation time. Always finite and non-negative.
class SimTime {
public:
    constexpr SimTime() noexcept = default;

    explicit SimTime(double v) : value_(v)
    {
        if (!std::isfinite(v) || v < 0.0)
            throw ConfigError("simulation time must be finite and non-negative");
    }

    constexpr double value() const noexcept { return value_; }

    friend constexpr auto operator<=>(SimTime, SimTime) noexcept = default;

private:
    double value_ = 0.0;
};

/// Index of the half-open window [i*W, (i+1)*W).
struct EpochIndex {
    std::uint64_t i = 0;

    friend constexpr auto operator<=>(EpochIndex, EpochIndex) noexcept = default;
};

/// Returns the unique i with i*W <= t < (i+1)*W, evaluated in the same
/// floating-point arithmetic everywhere so that all components agree on
/// boundary membership.
EpochIndex epoch_of(double t, double width);

inline EpochIndex epoch_of(SimTime t, SimTime width)
{
    return epoch_of(t.value(), width.value());
}

/// Start time of epoch i.
inline double epoch_start(EpochIndex e, double width)
{
    return static_cast<double>(e.i) * width;
}

} // namespace epochsim
