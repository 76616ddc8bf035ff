#include "telescale/clock.hpp"

#include <cmath>
#include <string>

#include "telescale/error.hpp"

namespace telescale {

std::int64_t ClockConfig::ticks_for(double seconds) const {
    return std::llround(seconds * rate_hz);
}

ClockConfig make_clock(double rate_hz, double round_trip_s) {
    if (!std::isfinite(rate_hz) || rate_hz <= 0.0) {
        throw ConfigError("control rate must be finite and positive, got " + std::to_string(rate_hz));
    }
    if (!std::isfinite(round_trip_s) || round_trip_s < 0.0) {
        throw ConfigError("round-trip delay must be finite and non-negative, got " +
                          std::to_string(round_trip_s));
    }
    ClockConfig clock;
    clock.rate_hz = rate_hz;
    clock.round_trip_s = round_trip_s;
    // std::llround rounds halfway cases away from zero.
    clock.one_way_samples = std::llround(rate_hz * round_trip_s / 2.0);
    return clock;
}

}  // namespace telescale
