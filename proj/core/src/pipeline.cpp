#include "telescale/pipeline.hpp"

#include <utility>

#include "telescale/error.hpp"

namespace telescale {

Pose master_to_target(const Pose& m_now, const Pose& m_prev, double scale_m, const Pose& target_prev) {
    Pose target = m_now;
    target.position = scale_m * (m_now.position - m_prev.position) + target_prev.position;
    return target;
}

ArmChannel::ArmChannel(const ClockConfig& clock, const Pose& slave_home)
    : rate_hz_(clock.rate_hz),
      target_(slave_home),
      command_line_(static_cast<std::size_t>(clock.one_way_samples)),
      delayed_prev_(slave_home),
      slave_(slave_home) {}

Pose ArmChannel::step(const Pose& master, const ScalingStrategy& strategy,
                      const ProximityModel* proximity) {
    if (!started_) {
        master_prev_ = master;
    }
    history_.push(master.position);
    master_scale_ = master_scale(strategy, history_, rate_hz_);
    target_ = master_to_target(master, master_prev_, master_scale_, target_);
    master_prev_ = master;

    const Pose delayed = command_line_.step(target_);
    if (const auto* positional = std::get_if<PositionalScaling>(&strategy)) {
        if (proximity == nullptr) {
            throw ConfigError("positional scaling needs a peg proximity model");
        }
        if (!started_) {
            delayed_prev_ = delayed;
        }
        slave_scale_ = positional_scale(proximity->distance(delayed.position), *positional);
        slave_ = apply_positional(delayed, delayed_prev_, slave_, slave_scale_);
        delayed_prev_ = delayed;
    } else {
        slave_scale_ = 1.0;
        slave_ = delayed;
    }
    started_ = true;
    return slave_;
}

TeleopPipeline::TeleopPipeline(const ClockConfig& clock, const ScalingStrategy& strategy,
                               std::optional<ProximityModel> proximity, const TaskGeometry& geometry,
                               const WorldState& initial)
    : clock_(clock),
      strategy_(strategy),
      proximity_(std::move(proximity)),
      geometry_(geometry),
      channels_{ArmChannel(clock, initial.grippers.left), ArmChannel(clock, initial.grippers.right)},
      world_(initial),
      observed_(initial),
      observation_line_(static_cast<std::size_t>(clock.one_way_samples)) {
    validate(strategy_);
    if (std::holds_alternative<PositionalScaling>(strategy_) && !proximity_) {
        throw ConfigError("positional scaling needs a peg proximity model");
    }
}

TeleopPipeline::Tick TeleopPipeline::step(const ArmPair<Pose>& master) {
    const ProximityModel* proximity = proximity_ ? &*proximity_ : nullptr;
    const Pose left = channels_.left.step(master.left, strategy_, proximity);
    const Pose right = channels_.right.step(master.right, strategy_, proximity);
    StepOutcome outcome = step_world(world_, geometry_, left, right, clock_.dt());
    world_ = std::move(outcome.world);
    events_ = std::move(outcome.events);
    observed_ = observation_line_.step(world_);
    return Tick{observed_, events_};
}

}  // namespace telescale
