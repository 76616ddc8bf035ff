#include "telescale/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "telescale/error.hpp"

namespace telescale {
namespace {

constexpr int kMaxReplans = 24;

double mid_x(const PegLayout& layout) {
    double sum = 0.0;
    for (const auto& c : layout.centers) sum += c.x();
    return sum / static_cast<double>(layout.centers.size());
}

double top_max(const PegLayout& layout) {
    double top = layout.centers[0].z();
    for (const auto& c : layout.centers) top = std::max(top, c.z());
    return top;
}

Vec3 outward(Arm arm) { return Vec3(arm == Arm::Left ? -1.0 : 1.0, 0.0, 0.0); }

RingState held_state(Arm arm) { return arm == Arm::Left ? RingState::HeldLeft : RingState::HeldRight; }

/// Horizontal rim direction leaving the most room to every peg.
Vec3 grasp_direction(const TaskSetup& setup, const Vec3& center, Arm arm) {
    const auto& g = setup.geometry;
    Vec3 best = outward(arm);
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 16; ++k) {
        const double angle = k * std::numbers::pi / 8.0;
        const Vec3 dir(std::cos(angle), std::sin(angle), 0.0);
        const Vec3 rim = center + dir * g.ring_rim_radius();
        double clearance = std::numeric_limits<double>::infinity();
        for (const auto& peg : setup.layout.centers) {
            clearance = std::min(clearance, std::hypot(rim.x() - peg.x(), rim.y() - peg.y()) - g.peg_radius);
        }
        const double score = std::min(clearance, 0.003) + 1e-4 * dir.dot(outward(arm));
        if (score > best_score) {
            best_score = score;
            best = dir;
        }
    }
    return best;
}

Waypoint move(Arm arm, TargetFrame frame, const Vec3& target, int ring, Precision precision,
              std::string label) {
    Waypoint w;
    w.arm = arm;
    w.frame = frame;
    w.target = target;
    w.ring = ring;
    w.precision = precision;
    w.label = std::move(label);
    return w;
}

Waypoint expecting(Waypoint w, Expect expect, Arm arm = Arm::Left) {
    w.expect = expect;
    w.expect_arm = arm;
    return w;
}

Waypoint then(Waypoint w, JawAction jaw, Await await, Arm await_arm = Arm::Left, int peg = -1) {
    w.jaw = jaw;
    w.await = await;
    w.await_arm = await_arm;
    w.await_peg = peg;
    return w;
}

Waypoint settling(Waypoint w) {
    w.settle = true;
    return w;
}

Waypoint background(Waypoint w) {
    w.blocking = false;
    return w;
}

struct Builder {
    const TaskSetup& setup;
    const PlanConfig& cfg;
    int ring;
    std::vector<Waypoint> steps;

    double tube() const { return setup.geometry.ring_tube_radius; }
    double rim() const { return setup.geometry.ring_rim_radius(); }
    double safe_z() const { return top_max(setup.layout) + cfg.hover_clearance; }
    double carry_z() const { return top_max(setup.layout) + tube() + cfg.lift_clearance; }

    void pick(Arm arm, const RingModel& r) {
        const Vec3 dir = r.state == RingState::OnPeg ? outward(arm) : grasp_direction(setup, r.center, arm);
        const Vec3 grasp = dir * rim() + Vec3(0, 0, cfg.grasp_lift);
        steps.push_back(settling(expecting(
            move(arm, TargetFrame::RingXY, Vec3(grasp.x(), grasp.y(), safe_z()), ring, Precision::Gross, "hover"),
            Expect::Resting)));
        steps.push_back(settling(expecting(move(arm, TargetFrame::RingOffset, grasp + Vec3(0, 0, cfg.approach_height),
                                                ring, Precision::Gross, "approach"),
                                           Expect::Resting)));
        steps.push_back(then(expecting(move(arm, TargetFrame::RingOffset, grasp, ring, Precision::Fine, "grasp"),
                                       Expect::Resting),
                             JawAction::Close, Await::HeldBy, arm));
        lift(arm, r);
    }

    void lift(Arm arm, const RingModel& r) {
        steps.push_back(expecting(move(arm, TargetFrame::RingAt, Vec3(r.center.x(), r.center.y(), carry_z()),
                                       ring, Precision::Gross, "lift"),
                                  Expect::HeldBy, arm));
    }

    void handoff(Arm giver, Arm receiver, const RingModel& r) {
        const Vec3 dest = setup.layout.centers[r.dest_peg];
        const Vec3 meet(mid_x(setup.layout), 0.5 * (r.center.y() + dest.y()),
                        top_max(setup.layout) + cfg.handoff_height);
        const Vec3 dir = outward(receiver);
        steps.push_back(background(move(receiver, TargetFrame::Absolute,
                                        meet + dir * (rim() + cfg.handoff_standoff + 0.010), ring,
                                        Precision::Gross, "prestage")));
        steps.push_back(expecting(move(giver, TargetFrame::RingAt, meet, ring, Precision::Gross, "carry"),
                                  Expect::HeldBy, giver));
        steps.push_back(expecting(move(receiver, TargetFrame::RingOffset, dir * (rim() + cfg.handoff_standoff),
                                       ring, Precision::Gross, "stage"),
                                  Expect::HeldBy, giver));
        steps.push_back(then(expecting(move(receiver, TargetFrame::RingOffset, dir * rim(), ring,
                                            Precision::Fine, "receive"),
                                       Expect::HeldBy, giver),
                             JawAction::Close, Await::HeldBoth));
        release_to(giver, receiver);
    }

    void release_to(Arm releasing, Arm keeper) {
        steps.push_back(then(move(releasing, TargetFrame::Hold, Vec3::Zero(), ring, Precision::Gross, "release"),
                             JawAction::Open, Await::HeldOnlyBy, keeper));
        steps.push_back(move(releasing, TargetFrame::Rise, outward(releasing) * cfg.retreat_distance, ring,
                             Precision::Gross, "clear"));
        steps.push_back(background(move(releasing, TargetFrame::Absolute, setup.gripper_home[releasing], ring,
                                        Precision::Gross, "home")));
    }

    void place(Arm arm, int dest_peg) {
        const Vec3 top = setup.layout.centers[dest_peg];
        const double top_z = top.z();
        steps.push_back(expecting(move(arm, TargetFrame::RingAt, Vec3(top.x(), top.y(), carry_z()), ring,
                                       Precision::Gross, "above"),
                                  Expect::HeldBy, arm));
        steps.push_back(expecting(move(arm, TargetFrame::RingAt,
                                       Vec3(top.x(), top.y(), top_z + tube() + cfg.align_clearance), ring,
                                       Precision::Fine, "align"),
                                  Expect::HeldBy, arm));
        steps.push_back(then(expecting(move(arm, TargetFrame::RingAt,
                                            Vec3(top.x(), top.y(), top_z - cfg.place_depth), ring,
                                            Precision::Fine, "place"),
                                       Expect::HeldBy, arm),
                             JawAction::Open, Await::OnPeg, arm, dest_peg));
        steps.push_back(move(arm, TargetFrame::Rise, Vec3(0, 0, cfg.place_depth + cfg.hover_clearance), ring,
                             Precision::Gross, "withdraw"));
        steps.push_back(background(
            move(arm, TargetFrame::Absolute, setup.gripper_home[arm], ring, Precision::Gross, "home")));
    }
};

}  // namespace

WorldState make_world(const TaskSetup& setup) {
    return make_world(setup.geometry, setup.layout, setup.rings, setup.gripper_home);
}

Arm arm_for_peg(const PegLayout& layout, int peg) { return arm_for_point(layout, layout.centers.at(peg)); }

Arm arm_for_point(const PegLayout& layout, const Vec3& point) {
    return point.x() < mid_x(layout) ? Arm::Left : Arm::Right;
}

void PlanConfig::validate() const {
    for (double v : {hover_clearance, approach_height, lift_clearance, handoff_height, handoff_standoff,
                     align_clearance, place_depth, retreat_distance, await_timeout}) {
        if (!std::isfinite(v) || v <= 0.0) throw ConfigError("plan distances and timeouts must be positive");
    }
    if (!std::isfinite(grasp_lift) || grasp_lift < 0.0) throw ConfigError("grasp_lift must be >= 0");
}

std::vector<Waypoint> plan_ring(const TaskSetup& setup, const PlanConfig& config, const WorldState& observed,
                                std::size_t index) {
    const RingModel& r = observed.rings.at(index);
    Builder b{setup, config, static_cast<int>(index), {}};
    const Arm placer = arm_for_peg(setup.layout, r.dest_peg);

    switch (r.state) {
        case RingState::OnPeg:
            if (r.peg == r.dest_peg) return {};
            [[fallthrough]];
        case RingState::OnGround: {
            const Arm picker = r.state == RingState::OnPeg ? arm_for_peg(setup.layout, r.peg)
                                                           : arm_for_point(setup.layout, r.center);
            b.pick(picker, r);
            if (picker != placer) b.handoff(picker, placer, r);
            b.place(placer, r.dest_peg);
            break;
        }
        case RingState::HeldLeft:
        case RingState::HeldRight: {
            const Arm holder = r.state == RingState::HeldLeft ? Arm::Left : Arm::Right;
            b.lift(holder, r);
            if (holder != placer) b.handoff(holder, placer, r);
            b.place(placer, r.dest_peg);
            break;
        }
        case RingState::HeldBoth:
            b.release_to(other(placer), placer);
            b.lift(placer, r);
            b.place(placer, r.dest_peg);
            break;
        case RingState::Falling:
            b.steps.push_back(then(move(placer, TargetFrame::Hold, Vec3::Zero(), b.ring, Precision::Gross, "watch"),
                                   JawAction::None, Await::NotFalling));
            break;
    }
    return b.steps;
}

WaypointPlan plan_waypoints(const TaskSetup& setup, const PlanConfig& config) {
    config.validate();
    const WorldState world = make_world(setup);
    WaypointPlan plan;
    for (std::size_t i = 0; i < world.ring_count; ++i) {
        plan.ring_starts.push_back(plan.steps.size());
        auto steps = plan_ring(setup, config, world, i);
        plan.steps.insert(plan.steps.end(), steps.begin(), steps.end());
    }
    return plan;
}

void PursuitConfig::validate() const {
    for (double v : {gain, gross_gain, fine_speed, gross_speed, max_hand_speed, arrival_tolerance,
                     gross_tolerance, settle_speed, noise_tau, frame_rate_hz}) {
        if (!std::isfinite(v) || v <= 0.0) throw ConfigError("pursuit operator rates and tolerances must be positive");
    }
    for (double v : {fine_caution, gross_caution, reaction_delay, settle_time, noise_std, participant_spread}) {
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("pursuit operator delays and noise must be >= 0");
    }
}

void MoveAndWaitConfig::validate(const ClockConfig& clock) const {
    for (double v : {step_size, gross_step_size, move_duration, arrival_tolerance, gross_tolerance, settle_speed,
                     frame_rate_hz}) {
        if (!std::isfinite(v) || v <= 0.0) throw ConfigError("move-and-wait sizes and tolerances must be positive");
    }
    if (!(reaction_delay >= 0.0) || !(settle_time >= 0.0)) {
        throw ConfigError("move-and-wait delays must be >= 0");
    }
    if (wait_time && !(*wait_time >= clock.round_trip_s)) {
        throw ConfigError("move-and-wait wait_time must cover the round-trip delay");
    }
}

std::string_view operator_kind(const OperatorConfig& config) {
    return std::holds_alternative<PursuitConfig>(config) ? "pursuit" : "move_and_wait";
}

double hand_speed_for(const ScalingStrategy& strategy, double slave_speed, double max_hand_speed) {
    const auto slave_at = [&](double h) { return h * nominal_gain(strategy, h); };
    if (slave_speed <= 0.0) return 0.0;
    if (slave_at(max_hand_speed) <= slave_speed) return max_hand_speed;
    double lo = 0.0;
    double hi = max_hand_speed;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (slave_at(mid) < slave_speed ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Operator::Operator(OperatorContext context, double frame_rate_hz, double reaction_delay, double settle_time,
                   double settle_speed, std::uint64_t seed)
    : context_(std::move(context)), rng_(seed), settle_time_(settle_time), settle_speed_(settle_speed) {
    validate(context_.strategy);
    frame_ticks_ = std::max<std::int64_t>(1, std::llround(context_.clock.rate_hz / frame_rate_hz));
    reaction_frames_ = static_cast<std::size_t>(std::llround(reaction_delay / frame_dt()));
    plan_ = context_.script ? *context_.script : plan_waypoints(context_.task, context_.plan);
    for (Arm arm : kArms) {
        master_[arm] = Pose::at(context_.task.gripper_home[arm]);
    }
    if (plan_.steps.empty()) phase_ = Phase::Finished;
}

const ArmPair<Pose>& Operator::step(const WorldState& observed) {
    if (ticks_ % frame_ticks_ == 0) {
        update(observed);
    }
    const double dt = context_.clock.dt();
    for (Arm arm : kArms) {
        increment_[arm] = velocity_[arm] * dt;
        master_[arm].position += increment_[arm];
    }
    ++ticks_;
    return master_;
}

bool Operator::settled(Arm arm) const {
    return settled_since_[arm] >= 0.0 && now() - settled_since_[arm] >= settle_time_ - 1e-9;
}

double Operator::observed_error(Arm arm, const ArmGoal& g, const WorldState& observed) const {
    return (g.position - observed.grippers[arm].position).norm();
}

Vec3 Operator::resolve(const ArmGoal& g, const WorldState& observed) const {
    const Waypoint& w = g.waypoint;
    if (w.ring < 0 || static_cast<std::size_t>(w.ring) >= observed.ring_count) return g.position;
    const RingModel& ring = observed.rings[w.ring];
    switch (w.frame) {
        case TargetFrame::RingOffset: return ring.center + w.target;
        case TargetFrame::RingXY: return Vec3(ring.center.x() + w.target.x(), ring.center.y() + w.target.y(), w.target.z());
        case TargetFrame::RingAt: return w.target + ring.grip_offset[w.arm];
        default: return g.position;
    }
}

void Operator::update(const WorldState& observed) {
    frames_.push_back(observed);
    while (frames_.size() > reaction_frames_ + 1) frames_.pop_front();
    const WorldState& seen = frames_.front();

    for (Arm arm : kArms) {
        const Vec3& p = seen.grippers[arm].position;
        if (seen_) {
            const double speed = (p - last_seen_[arm]).norm() / frame_dt();
            if (speed < settle_speed_) {
                if (settled_since_[arm] < 0.0) settled_since_[arm] = now();
            } else {
                settled_since_[arm] = -1.0;
            }
        }
        last_seen_[arm] = p;
    }
    seen_ = true;

    if (!done_) {
        for (int guard = 0; guard < 16 && run_step(seen); ++guard) {
        }
    }

    const bool has_step = phase_ != Phase::Finished && cursor_ < plan_.steps.size();
    for (Arm arm : kArms) {
        ArmGoal& g = goals_[arm];
        if (g.active) g.position = resolve(g, seen);
        const bool current = has_step && plan_.steps[cursor_].arm == arm;
        velocity_[arm] = done_ ? Vec3::Zero() : hand_velocity(arm, g, seen, current);
    }
}

bool Operator::run_step(const WorldState& seen) {
    const double round_trip = context_.clock.round_trip_s;
    if (phase_ == Phase::Finished) {
        // A script ends with its last step; the task plan ends with the task.
        if (context_.script || task_complete(seen)) {
            done_ = true;
        } else if (replans_ < kMaxReplans && now() - last_replan_ > round_trip + context_.plan.await_timeout) {
            replan(seen);
        }
        return false;
    }

    const Waypoint& step = plan_.steps[cursor_];
    if (!step_begun_) begin_step(seen);

    if (phase_ == Phase::Moving) {
        if (expectation_violated(step, seen)) {
            replan(seen);
            return false;
        }
        if (!step.blocking) {
            advance();
            return true;
        }
        ArmGoal& g = goals_[step.arm];
        if (g.active) g.position = resolve(g, seen);
        arrived_now_ = step.frame == TargetFrame::Hold || arrived(step.arm, g, seen);
        if (!arrived_now_) return false;
        if (step.frame != TargetFrame::Hold) g.waypoint.frame = TargetFrame::Absolute;
        if (step.jaw == JawAction::Close) master_[step.arm].jaw = Jaw::Closed;
        if (step.jaw == JawAction::Open) master_[step.arm].jaw = Jaw::Open;
        if (step.await == Await::None) {
            advance();
            return true;
        }
        phase_ = Phase::Awaiting;
        await_started_ = now();
        return false;
    }

    if (await_satisfied(step, seen)) {
        if (step.await == Await::NotFalling) {
            replan(seen);
            return false;
        }
        advance();
        return true;
    }
    if (await_failed(step, seen) || now() - await_started_ > round_trip + context_.plan.await_timeout) {
        replan(seen);
    }
    return false;
}

void Operator::begin_step(const WorldState& seen) {
    const Waypoint& step = plan_.steps[cursor_];
    step_begun_ = true;
    if (step.frame == TargetFrame::Hold) return;
    ArmGoal& g = goals_[step.arm];
    g.active = true;
    g.waypoint = step;
    switch (step.frame) {
        case TargetFrame::Absolute: g.position = step.target; break;
        case TargetFrame::Rise:
            g.position = seen.grippers[step.arm].position + step.target;
            g.waypoint.frame = TargetFrame::Absolute;
            break;
        default: g.position = resolve(g, seen); break;
    }
}

void Operator::advance() {
    ++cursor_;
    step_begun_ = false;
    arrived_now_ = false;
    phase_ = Phase::Moving;
    if (cursor_ >= plan_.steps.size()) {
        phase_ = Phase::Finished;
        last_replan_ = now();
    }
}

void Operator::replan(const WorldState& seen) {
    ++replans_;
    last_replan_ = now();
    if (replans_ > kMaxReplans) {
        plan_.steps.clear();
        cursor_ = 0;
        phase_ = Phase::Finished;
        return;
    }

    for (Arm arm : kArms) {
        goals_[arm].waypoint.frame = TargetFrame::Absolute;
    }

    WaypointPlan next;
    const auto& setup = context_.task;
    for (Arm arm : kArms) {
        bool holding = false;
        for (const auto& ring : seen.active_rings()) holding = holding || held_by(ring, arm);
        if (master_[arm].jaw == Jaw::Closed && !holding) {
            Waypoint open;
            open.arm = arm;
            open.frame = TargetFrame::Hold;
            open.jaw = JawAction::Open;
            open.label = "let go";
            next.steps.push_back(open);
            Waypoint up;
            up.arm = arm;
            up.frame = TargetFrame::Rise;
            up.target = Vec3(0, 0, context_.plan.hover_clearance + 0.004);
            up.label = "back off";
            next.steps.push_back(up);
        }
    }
    for (std::size_t i = 0; i < seen.ring_count; ++i) {
        const auto& ring = seen.rings[i];
        const bool placed = ring.state == RingState::OnPeg && ring.peg == ring.dest_peg;
        if (placed) continue;
        if (seen.pegs[ring.dest_peg].state == PegState::KnockedDown) continue;
        next.ring_starts.push_back(next.steps.size());
        auto steps = plan_ring(setup, context_.plan, seen, i);
        next.steps.insert(next.steps.end(), steps.begin(), steps.end());
    }
    plan_ = std::move(next);
    cursor_ = 0;
    step_begun_ = false;
    arrived_now_ = false;
    phase_ = plan_.steps.empty() ? Phase::Finished : Phase::Moving;
}

bool Operator::expectation_violated(const Waypoint& step, const WorldState& seen) const {
    if (step.ring < 0 || step.expect == Expect::Nothing) return false;
    const RingModel& ring = seen.rings[step.ring];
    switch (step.expect) {
        case Expect::Resting: return ring.state != RingState::OnPeg && ring.state != RingState::OnGround;
        case Expect::HeldBy: return !held_by(ring, step.expect_arm);
        case Expect::Nothing: return false;
    }
    return false;
}

bool Operator::await_satisfied(const Waypoint& step, const WorldState& seen) const {
    if (step.ring < 0) return true;
    const RingModel& ring = seen.rings[step.ring];
    switch (step.await) {
        case Await::None: return true;
        case Await::HeldBy: return held_by(ring, step.await_arm);
        case Await::HeldBoth: return ring.state == RingState::HeldBoth;
        case Await::HeldOnlyBy: return ring.state == held_state(step.await_arm);
        case Await::OnPeg: return ring.state == RingState::OnPeg && ring.peg == step.await_peg;
        case Await::NotFalling: return ring.state != RingState::Falling;
    }
    return true;
}

bool Operator::await_failed(const Waypoint& step, const WorldState& seen) const {
    if (step.ring < 0) return false;
    const RingModel& ring = seen.rings[step.ring];
    const bool loose = ring.state == RingState::Falling || ring.state == RingState::OnGround;
    switch (step.await) {
        case Await::HeldBy: return ring.state == RingState::Falling;
        case Await::HeldBoth:
        case Await::HeldOnlyBy: return loose || ring.state == RingState::OnPeg;
        case Await::OnPeg: return ring.state == RingState::OnGround || (ring.state == RingState::OnPeg && ring.peg != step.await_peg);
        default: return false;
    }
}

PursuitOperator::PursuitOperator(OperatorContext context, PursuitConfig config, std::uint64_t seed)
    : Operator(std::move(context), config.frame_rate_hz, config.reaction_delay, config.settle_time,
               config.settle_speed, seed),
      config_(config) {
    config_.validate();
    std::normal_distribution<double> spread(0.0, config_.participant_spread);
    speed_factor_ = std::clamp(1.0 + spread(rng_), 0.6, 1.4);
    gain_factor_ = std::clamp(1.0 + spread(rng_), 0.6, 1.4);
    fine_caution_ = 1.0 + config_.fine_caution * context_.clock.round_trip_s;
    gross_caution_ = 1.0 + config_.gross_caution * context_.clock.round_trip_s;
}

Vec3 PursuitOperator::hand_velocity(Arm arm, const ArmGoal& g, const WorldState& seen, bool) {
    Vec3 v = Vec3::Zero();
    if (g.active) {
        const Vec3 e = g.position - seen.grippers[arm].position;
        const double d = e.norm();
        if (g.waypoint.precision == Precision::Fine) {
            v = (config_.gain * gain_factor_) * e;
            const double cap = config_.fine_speed * speed_factor_ / fine_caution_;
            if (v.norm() > cap) v *= cap / v.norm();
        } else if (d > 0.0) {
            const double u = std::min(config_.gross_speed * speed_factor_,
                                      config_.gross_gain * gain_factor_ / gross_caution_ * d);
            v = e / d * hand_speed_for(context_.strategy, u, config_.max_hand_speed * speed_factor_);
        }
    }
    if (config_.noise_std > 0.0) {
        const double a = std::exp(-frame_dt() / config_.noise_tau);
        const double kick = config_.noise_std * std::sqrt(1.0 - a * a);
        std::normal_distribution<double> unit(0.0, 1.0);
        Vec3& n = noise_[arm];
        for (int i = 0; i < 3; ++i) n[i] = a * n[i] + kick * unit(rng_);
        v += n;
    }
    return v;
}

bool PursuitOperator::arrived(Arm arm, const ArmGoal& g, const WorldState& seen) {
    const double d = observed_error(arm, g, seen);
    if (g.waypoint.precision == Precision::Fine) {
        return d < config_.arrival_tolerance && settled(arm);
    }
    return d < config_.gross_tolerance && (!g.waypoint.settle || settled(arm));
}

MoveAndWaitOperator::MoveAndWaitOperator(OperatorContext context, MoveAndWaitConfig config, std::uint64_t seed)
    : Operator(std::move(context), config.frame_rate_hz, config.reaction_delay, config.settle_time,
               config.settle_speed, seed),
      config_(config) {
    config_.validate(context_.clock);
    wait_time_ = config_.wait_time.value_or(context_.clock.round_trip_s + config_.settle_time);
}

Vec3 MoveAndWaitOperator::hand_velocity(Arm arm, const ArmGoal& g, const WorldState& seen, bool) {
    ArmMotion& m = arms_[arm];
    switch (m.phase) {
        case MotionPhase::Moving:
            if (now() + 1e-9 < m.until) return m.velocity;
            m.phase = MotionPhase::Waiting;
            m.until = now() + wait_time_;
            return Vec3::Zero();
        case MotionPhase::Waiting:
            if (now() + 1e-9 >= m.until && settled(arm)) m.phase = MotionPhase::Ready;
            return Vec3::Zero();
        case MotionPhase::Ready: break;
    }
    if (!g.active || !settled(arm)) return Vec3::Zero();
    const bool fine = g.waypoint.precision == Precision::Fine;
    const Vec3 e = g.position - seen.grippers[arm].position;
    const double d = e.norm();
    if (d < (fine ? config_.arrival_tolerance : config_.gross_tolerance)) return Vec3::Zero();

    const double step = std::min(fine ? config_.step_size : config_.gross_step_size, d);
    const double frames = std::max(1.0, std::round(config_.move_duration / frame_dt()));
    const double duration = frames * frame_dt();
    const double hand = hand_speed_for(context_.strategy, step / duration, 1.0);
    m.velocity = e / d * hand;
    m.phase = MotionPhase::Moving;
    m.until = now() + duration;
    return m.velocity;
}

bool MoveAndWaitOperator::arrived(Arm arm, const ArmGoal& g, const WorldState& seen) {
    const bool fine = g.waypoint.precision == Precision::Fine;
    const double d = observed_error(arm, g, seen);
    return d < (fine ? config_.arrival_tolerance : config_.gross_tolerance) &&
           arms_[arm].phase == MotionPhase::Ready && settled(arm);
}

std::unique_ptr<Operator> make_operator(const OperatorConfig& config, OperatorContext context, std::uint64_t seed) {
    if (const auto* pursuit = std::get_if<PursuitConfig>(&config)) {
        return std::make_unique<PursuitOperator>(std::move(context), *pursuit, seed);
    }
    return std::make_unique<MoveAndWaitOperator>(std::move(context), std::get<MoveAndWaitConfig>(config), seed);
}

}  // namespace telescale
