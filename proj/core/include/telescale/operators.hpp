#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "telescale/clock.hpp"
#include "telescale/peg_task.hpp"
#include "telescale/plane.hpp"
#include "telescale/scaling.hpp"

namespace telescale {

/// Everything needed to build the initial world.
struct TaskSetup {
    TaskGeometry geometry;
    PegLayout layout;
    std::vector<RingSpec> rings;
    ArmPair<Vec3> gripper_home;
};

WorldState make_world(const TaskSetup& setup);

/// Arm that works the pegs on its side of the board.
Arm arm_for_peg(const PegLayout& layout, int peg);
Arm arm_for_point(const PegLayout& layout, const Vec3& point);

/// Distances shaping the synthetic plan, meters.
struct PlanConfig {
    double hover_clearance = 0.004;    // gripper above the highest peg top while hovering
    double approach_height = 0.003;    // start of the fine descent above the grasp point
    double grasp_lift = 0.00012;       // gripper above the rim centerline at grasp
    double lift_clearance = 0.003;     // ring bottom above peg tops after lifting
    double handoff_height = 0.006;     // ring center above peg tops at the hand-off
    double handoff_standoff = 0.003;   // receiver staging distance outside the rim
    double align_clearance = 0.0015;   // ring bottom above the peg top before threading
    double place_depth = 0.003;        // ring center below the peg top at release
    double retreat_distance = 0.004;
    double await_timeout = 2.0;        // seconds, added to the round trip

    void validate() const;
};

enum class Precision : std::uint8_t { Gross, Fine };

/// How a waypoint's `target` is interpreted against the observed world.
enum class TargetFrame : std::uint8_t {
    Absolute,    // world position
    RingOffset,  // ring center + target
    RingXY,      // ring center x/y + target x/y, absolute z
    RingAt,      // gripper placed so the ring center lands on target
    Rise,        // own observed position when the step starts + target
    Hold,        // no motion goal
};

enum class JawAction : std::uint8_t { None, Close, Open };

enum class Await : std::uint8_t { None, HeldBy, HeldBoth, HeldOnlyBy, OnPeg, NotFalling };

/// Ring condition that must keep holding while a step runs; a violation
/// triggers a replan from the observed state.
enum class Expect : std::uint8_t { Nothing, Resting, HeldBy };

struct Waypoint {
    Arm arm = Arm::Left;
    TargetFrame frame = TargetFrame::Absolute;
    Vec3 target = Vec3::Zero();
    int ring = -1;
    Precision precision = Precision::Gross;
    bool blocking = true;
    /// Arrival also requires the observed arm to have come to rest.
    bool settle = false;
    JawAction jaw = JawAction::None;
    Await await = Await::None;
    Arm await_arm = Arm::Left;
    int await_peg = -1;
    Expect expect = Expect::Nothing;
    Arm expect_arm = Arm::Left;
    std::string label;
};

struct WaypointPlan {
    std::vector<Waypoint> steps;
    /// Index of the first step of each ring's sub-plan.
    std::vector<std::size_t> ring_starts;
};

/// Grasp, lift, hand-off and place for every ring in order (front, then back).
WaypointPlan plan_waypoints(const TaskSetup& setup, const PlanConfig& config = {});

/// Steps that finish ring `ring` starting from its state in `observed`.
std::vector<Waypoint> plan_ring(const TaskSetup& setup, const PlanConfig& config,
                                const WorldState& observed, std::size_t ring);

/// Tracks a moving goal at gain * error, then declares arrival from the
/// delayed observation.
struct PursuitConfig {
    double gain = 5.0;                  // 1/s, hand speed per meter of slave error (fine phases)
    double gross_gain = 2.0;            // 1/s, slave-space approach rate (gross phases)
    double fine_speed = 0.003;          // m/s hand speed cap in fine phases
    double gross_speed = 0.008;         // m/s slave speed the operator aims for in free space
    double max_hand_speed = 0.04;       // m/s
    double fine_caution = 2.7;          // 1/s; fine speed cap divided by (1 + fine_caution * round trip)
    double gross_caution = 4.0;         // 1/s; gross approach rate divided by (1 + gross_caution * round trip)
    double reaction_delay = 0.1;        // s
    double arrival_tolerance = 0.00025; // m
    double gross_tolerance = 0.0015;    // m
    double settle_time = 0.2;           // s
    double settle_speed = 0.0004;       // m/s
    double noise_std = 0.0003;          // m/s, stationary std of hand-velocity jitter
    double noise_tau = 0.5;             // s, jitter correlation time
    double participant_spread = 0.15;   // relative std of per-seed speed and gain
    double frame_rate_hz = 30.0;

    void validate() const;
};

/// Bounded step toward the goal, then hold still until the delayed view settles.
struct MoveAndWaitConfig {
    double step_size = 0.002;           // m, slave-space step in fine phases
    double gross_step_size = 0.010;     // m, slave-space step in gross phases
    double move_duration = 0.25;        // s
    std::optional<double> wait_time;    // s; defaults to the round trip plus settle_time
    double arrival_tolerance = 0.00025;
    double gross_tolerance = 0.0015;
    double settle_time = 0.2;
    double settle_speed = 0.0004;
    double reaction_delay = 0.1;
    double frame_rate_hz = 30.0;

    void validate(const ClockConfig& clock) const;
};

using OperatorConfig = std::variant<PursuitConfig, MoveAndWaitConfig>;

std::string_view operator_kind(const OperatorConfig& config);

struct OperatorContext {
    TaskSetup task;
    PlanConfig plan;
    ScalingStrategy strategy;
    ClockConfig clock;
    /// Steps to follow instead of the task plan, e.g. a single reach.
    std::optional<WaypointPlan> script;
};

/// Hand speed (m/s) at which the perceived gain yields `slave_speed`.
double hand_speed_for(const ScalingStrategy& strategy, double slave_speed, double max_hand_speed);

/// Synthetic participant closing the loop on delayed observations.
class Operator {
public:
    virtual ~Operator() = default;

    /// One control tick: consume the delayed observation, return master poses.
    const ArmPair<Pose>& step(const WorldState& observed);

    const ArmPair<Pose>& master() const { return master_; }
    /// Master displacement produced by the last step.
    const ArmPair<Vec3>& increment() const { return increment_; }
    bool done() const { return done_; }
    std::size_t cursor() const { return cursor_; }
    const WaypointPlan& plan() const { return plan_; }
    int replans() const { return replans_; }
    /// Whether the current step's arm has been observed at its goal.
    bool arrived_now() const { return arrived_now_; }

protected:
    struct ArmGoal {
        bool active = false;
        Waypoint waypoint;
        Vec3 position = Vec3::Zero();
    };

    Operator(OperatorContext context, double frame_rate_hz, double reaction_delay,
             double settle_time, double settle_speed, std::uint64_t seed);

    virtual Vec3 hand_velocity(Arm arm, const ArmGoal& goal, const WorldState& observed, bool current) = 0;
    virtual bool arrived(Arm arm, const ArmGoal& goal, const WorldState& observed) = 0;

    double now() const { return static_cast<double>(ticks_) * context_.clock.dt(); }
    double frame_dt() const { return frame_ticks_ * context_.clock.dt(); }
    bool settled(Arm arm) const;
    double observed_error(Arm arm, const ArmGoal& goal, const WorldState& observed) const;
    ArmGoal& goal(Arm arm) { return goals_[arm]; }

    OperatorContext context_;
    std::mt19937_64 rng_;

private:
    void update(const WorldState& observed);
    bool run_step(const WorldState& observed);
    void begin_step(const WorldState& observed);
    void advance();
    void replan(const WorldState& observed);
    bool expectation_violated(const Waypoint& step, const WorldState& observed) const;
    bool await_satisfied(const Waypoint& step, const WorldState& observed) const;
    bool await_failed(const Waypoint& step, const WorldState& observed) const;
    Vec3 resolve(const ArmGoal& goal, const WorldState& observed) const;

    enum class Phase : std::uint8_t { Moving, Awaiting, Finished };

    WaypointPlan plan_;
    std::size_t cursor_ = 0;
    Phase phase_ = Phase::Moving;
    bool step_begun_ = false;
    double await_started_ = 0.0;
    double last_replan_ = 0.0;
    int replans_ = 0;
    bool done_ = false;
    bool arrived_now_ = false;

    std::int64_t ticks_ = 0;
    std::int64_t frame_ticks_ = 1;
    std::size_t reaction_frames_ = 0;
    double settle_time_;
    double settle_speed_;
    std::deque<WorldState> frames_;
    ArmPair<double> settled_since_{-1.0, -1.0};
    ArmPair<Vec3> last_seen_{Vec3::Zero(), Vec3::Zero()};
    bool seen_ = false;

    ArmPair<ArmGoal> goals_;
    ArmPair<Pose> master_;
    ArmPair<Vec3> velocity_{Vec3::Zero(), Vec3::Zero()};
    ArmPair<Vec3> increment_{Vec3::Zero(), Vec3::Zero()};
};

class PursuitOperator final : public Operator {
public:
    PursuitOperator(OperatorContext context, PursuitConfig config, std::uint64_t seed);

    const PursuitConfig& config() const { return config_; }
    /// Per-seed participant multipliers.
    double speed_factor() const { return speed_factor_; }
    double gain_factor() const { return gain_factor_; }

protected:
    Vec3 hand_velocity(Arm arm, const ArmGoal& goal, const WorldState& observed, bool current) override;
    bool arrived(Arm arm, const ArmGoal& goal, const WorldState& observed) override;

private:
    PursuitConfig config_;
    double speed_factor_ = 1.0;
    double gain_factor_ = 1.0;
    double fine_caution_ = 1.0;
    double gross_caution_ = 1.0;
    ArmPair<Vec3> noise_{Vec3::Zero(), Vec3::Zero()};
};

class MoveAndWaitOperator final : public Operator {
public:
    MoveAndWaitOperator(OperatorContext context, MoveAndWaitConfig config, std::uint64_t seed);

    const MoveAndWaitConfig& config() const { return config_; }
    double wait_time() const { return wait_time_; }
    bool waiting(Arm arm) const { return arms_[arm].phase != MotionPhase::Ready; }

protected:
    Vec3 hand_velocity(Arm arm, const ArmGoal& goal, const WorldState& observed, bool current) override;
    bool arrived(Arm arm, const ArmGoal& goal, const WorldState& observed) override;

private:
    enum class MotionPhase : std::uint8_t { Ready, Moving, Waiting };
    struct ArmMotion {
        MotionPhase phase = MotionPhase::Ready;
        double until = 0.0;
        Vec3 velocity = Vec3::Zero();
    };

    MoveAndWaitConfig config_;
    double wait_time_ = 0.0;
    ArmPair<ArmMotion> arms_;
};

std::unique_ptr<Operator> make_operator(const OperatorConfig& config, OperatorContext context,
                                        std::uint64_t seed);

}  // namespace telescale
