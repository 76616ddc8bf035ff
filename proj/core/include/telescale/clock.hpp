#pragma once

#include <cstdint>

namespace telescale {

/// Fixed control rate and round-trip latency of a teleoperation loop.
struct ClockConfig {
    double rate_hz = 1000.0;
    double round_trip_s = 0.0;
    /// Samples of delay on each of the command and observation paths.
    std::int64_t one_way_samples = 0;

    double dt() const { return 1.0 / rate_hz; }
    std::int64_t round_trip_samples() const { return 2 * one_way_samples; }
    std::int64_t ticks_for(double seconds) const;
};

/// one_way_samples = round(rate * delay / 2), halves rounded away from zero.
/// Throws ConfigError on non-finite input, rate <= 0 or delay < 0.
ClockConfig make_clock(double rate_hz, double round_trip_s);

}  // namespace telescale
