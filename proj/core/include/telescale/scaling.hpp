#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>

#include "telescale/pose.hpp"

namespace telescale {

/// Fixed master-to-slave gain.
struct ConstantScaling {
    double scale_m = 0.2;
};

/// Master-side constant gain followed by a slave-side gain that shrinks near
/// obstacles: scale_s = clamp(k * r, min_scale, max_scale), r in meters.
struct PositionalScaling {
    double scale_m = 0.2;
    double k = 100.0;  // 1/m
    double min_scale = 0.5;
    double max_scale = 1.0;
};

/// Master-side gain that grows with filtered hand speed: v1 + v2 * |dm/dt|.
/// The ceiling, when set, caps the resulting gain; it is off by default.
struct VelocityScaling {
    double v1 = 0.1;
    double v2 = 100.0;  // s/m
    std::optional<double> ceiling;
};

using ScalingStrategy = std::variant<ConstantScaling, PositionalScaling, VelocityScaling>;

/// Throws ConfigError when a strategy's parameters violate its invariants.
void validate(const ScalingStrategy& strategy);

std::string_view strategy_kind(const ScalingStrategy& strategy);

double positional_scale(double r, const PositionalScaling& cfg);

/// Slave integrates the delayed target's increment scaled by scale_s.
/// Orientation and jaw follow the delayed target.
Pose apply_positional(const Pose& target_delayed_now, const Pose& target_delayed_prev,
                      const Pose& slave_prev, double scale_s);

/// Last four master positions, newest first.
class MasterHistory {
public:
    void push(const Vec3& position);
    bool warm() const { return size_ == kLength; }
    std::size_t size() const { return size_; }
    /// Element 0 is m[n], element 3 is m[n-3].
    std::span<const Vec3, 4> newest_first() const { return samples_; }
    void clear() { size_ = 0; }

    static constexpr std::size_t kLength = 4;

private:
    std::array<Vec3, kLength> samples_{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    std::size_t size_ = 0;
};

/// (m[n] + m[n-1] - m[n-2] - m[n-3]) / (4 / f_s), newest-first input.
Vec3 filtered_velocity(std::span<const Vec3, 4> newest_first, double rate_hz);

/// Zero until the history holds four samples.
Vec3 filtered_velocity(const MasterHistory& history, double rate_hz);

double velocity_scale(const MasterHistory& history, const VelocityScaling& cfg, double rate_hz);

/// Gain applied to the master increment for the given strategy.
double master_scale(const ScalingStrategy& strategy, const MasterHistory& history, double rate_hz);

/// Static master-to-slave gain an operator perceives at a steady hand speed
/// (m/s). For positional scaling only the master-side factor is visible.
double nominal_gain(const ScalingStrategy& strategy, double hand_speed);

}  // namespace telescale
