#include "epochsim/sim_time.hpp"

namespace epochsim {

EpochIndex epoch_of(double t, double width)
{
    if (!std::isfinite(width) || width <= 0.0)
        throw ConfigError("epoch width must be finite and positive");
    if (!std::isfinite(t) || t < 0.0)
        throw ConfigError("timestamp must be finite and non-negative");

    auto i = static_cast<std::uint64_t>(std::floor(t / width));
    // The quotient can be off by one near a boundary; settle it against the
    // products that define the window.
    while (i > 0 && static_cast<double>(i) * width > t)
        --i;
    while (static_cast<double>(i + 1) * width <= t)
        ++i;
    return EpochIndex{i};
}

} // namespace epochsim
