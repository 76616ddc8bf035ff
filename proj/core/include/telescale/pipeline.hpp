#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "telescale/clock.hpp"
#include "telescale/delay_line.hpp"
#include "telescale/peg_task.hpp"
#include "telescale/plane.hpp"
#include "telescale/pose.hpp"
#include "telescale/scaling.hpp"

namespace telescale {

/// s_m[n] = scale_m * (m[n] - m[n-1]) + s_m[n-1]; orientation and jaw follow m[n].
Pose master_to_target(const Pose& m_now, const Pose& m_prev, double scale_m, const Pose& target_prev);

/// One arm's path from master pose to slave command.
class ArmChannel {
public:
    ArmChannel(const ClockConfig& clock, const Pose& slave_home);

    /// Advances one tick. `proximity` is required for positional scaling.
    Pose step(const Pose& master, const ScalingStrategy& strategy, const ProximityModel* proximity);

    const Pose& target() const { return target_; }
    const Pose& slave() const { return slave_; }
    double last_master_scale() const { return master_scale_; }
    double last_slave_scale() const { return slave_scale_; }

private:
    double rate_hz_;
    bool started_ = false;
    Pose master_prev_;
    Pose target_;
    MasterHistory history_;
    DelayLine<Pose> command_line_;
    Pose delayed_prev_;
    Pose slave_;
    double master_scale_ = 1.0;
    double slave_scale_ = 1.0;
};

/// Master -> scaling -> command delay -> world -> observation delay.
class TeleopPipeline {
public:
    TeleopPipeline(const ClockConfig& clock, const ScalingStrategy& strategy,
                   std::optional<ProximityModel> proximity, const TaskGeometry& geometry,
                   const WorldState& initial);

    struct Tick {
        /// Delayed snapshot shown to the operator.
        const WorldState& observed;
        /// Events raised by the true world this tick.
        const std::vector<ErrorEvent>& events;
    };

    Tick step(const ArmPair<Pose>& master);

    const WorldState& world() const { return world_; }
    const WorldState& observed() const { return observed_; }
    const ClockConfig& clock() const { return clock_; }
    const ScalingStrategy& strategy() const { return strategy_; }
    const ArmChannel& channel(Arm arm) const { return channels_[arm]; }
    std::int64_t tick() const { return world_.tick; }

private:
    ClockConfig clock_;
    ScalingStrategy strategy_;
    std::optional<ProximityModel> proximity_;
    TaskGeometry geometry_;
    ArmPair<ArmChannel> channels_;
    WorldState world_;
    WorldState observed_;
    DelayLine<WorldState> observation_line_;
    std::vector<ErrorEvent> events_;
};

}  // namespace telescale
