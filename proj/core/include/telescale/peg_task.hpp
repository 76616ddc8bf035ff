#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "telescale/plane.hpp"
#include "telescale/pose.hpp"

namespace telescale {

/// Quasi-static task dimensions, meters (fall_speed in m/s).
struct TaskGeometry {
    double peg_radius = 0.002;
    double peg_height = 0.010;
    double ring_inner_radius = 0.003;
    double ring_tube_radius = 0.0005;
    double grasp_radius = 0.004;
    double gripper_radius = 0.0005;
    double stretch_threshold = 0.002;
    double peg_move_threshold = 0.004;
    double peg_topple_threshold = 0.008;
    double ground_tolerance = 0.0005;
    double fall_speed = 0.2;
    Vec3 workspace_min{-0.01, 0.0, -0.02};
    Vec3 workspace_max{0.11, 0.10, 0.05};

    /// Lateral play of a threaded ring around its peg.
    double ring_slack() const { return ring_inner_radius - peg_radius; }
    double ring_outer_radius() const { return ring_inner_radius + 2.0 * ring_tube_radius; }
    /// Radius of the tube centerline, where a gripper takes hold.
    double ring_rim_radius() const { return ring_inner_radius + ring_tube_radius; }

    void validate() const;
};

enum class PegState : std::uint8_t { Upright, Displaced, KnockedDown };

struct PegModel {
    Vec3 center = Vec3::Zero();  // top center
    double radius = 0.002;
    double height = 0.010;
    PegState state = PegState::Upright;
    double displacement = 0.0;
    /// Current pull of a constrained ring on the peg (stretch proxy), meters.
    double pull = 0.0;
    bool over_move_threshold = false;
};

enum class RingId : std::uint8_t { Front, Back };

enum class RingState : std::uint8_t { OnPeg, HeldLeft, HeldRight, HeldBoth, OnGround, Falling };

enum class StretchKind : std::uint8_t { None, Handoff, OnPeg };

struct RingModel {
    RingId id = RingId::Front;
    RingState state = RingState::OnPeg;
    int peg = -1;          // resting peg while OnPeg
    int threaded = -1;     // peg passing through the ring while held
    int blocked_on = -1;   // peg whose top the held ring is pressed against
    int source_peg = -1;
    int dest_peg = -1;
    Vec3 center = Vec3::Zero();
    double inner_radius = 0.003;
    ArmPair<Vec3> grip_offset{Vec3::Zero(), Vec3::Zero()};
    double stretch = 0.0;
    StretchKind stretch_kind = StretchKind::None;
    /// Consecutive ticks with stretch above threshold.
    std::int64_t stretch_ticks = 0;
    double stretch_timer = 0.0;
    bool pressing_ground = false;
};

enum class ErrorKind : std::uint8_t {
    TouchPeg,
    TouchGround,
    StretchHandoffShort,
    DropRing,
    StretchOnPegShort,
    StretchAdditionalSecond,
    StretchOrMovePeg,
    KnockDownPeg,
};

inline constexpr std::array<ErrorKind, 8> kAllErrorKinds{
    ErrorKind::TouchPeg,          ErrorKind::TouchGround,
    ErrorKind::StretchHandoffShort, ErrorKind::DropRing,
    ErrorKind::StretchOnPegShort, ErrorKind::StretchAdditionalSecond,
    ErrorKind::StretchOrMovePeg,  ErrorKind::KnockDownPeg,
};

/// Severity weights of the peg-transfer error metric.
constexpr int weight(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::TouchPeg: return 1;
        case ErrorKind::TouchGround: return 2;
        case ErrorKind::StretchHandoffShort: return 2;
        case ErrorKind::DropRing: return 3;
        case ErrorKind::StretchOnPegShort: return 4;
        case ErrorKind::StretchAdditionalSecond: return 4;
        case ErrorKind::StretchOrMovePeg: return 10;
        case ErrorKind::KnockDownPeg: return 20;
    }
    return 0;
}

std::string_view to_string(ErrorKind kind);
ErrorKind error_kind_from_string(std::string_view name);
std::string_view to_string(RingState state);
std::string_view to_string(RingId id);
RingId ring_id_from_string(std::string_view name);
std::string_view to_string(PegState state);

struct ErrorEvent {
    ErrorKind kind = ErrorKind::TouchPeg;
    std::int64_t tick = 0;
    int weight = 0;
    /// What made contact, e.g. "gripper_left" or "ring_front".
    std::string source;

    static ErrorEvent make(ErrorKind kind, std::int64_t tick, std::string source);

    friend bool operator==(const ErrorEvent&, const ErrorEvent&) = default;
};

/// Which ring starts where and where it must end up.
struct RingSpec {
    RingId id = RingId::Front;
    int from_peg = 0;
    int to_peg = 2;

    friend bool operator==(const RingSpec&, const RingSpec&) = default;
};

inline constexpr std::size_t kMaxRings = 2;

/// Full world snapshot; a plain value, cheap to copy into delay lines.
struct WorldState {
    std::int64_t tick = 0;
    double ground_z = 0.0;
    ArmPair<Pose> grippers;
    std::array<PegModel, 4> pegs;
    std::array<RingModel, kMaxRings> rings;
    std::size_t ring_count = 0;

    ArmPair<std::array<bool, 4>> gripper_peg_contact{};
    ArmPair<bool> gripper_ground_contact{};

    std::span<const RingModel> active_rings() const { return {rings.data(), ring_count}; }
    std::span<RingModel> active_rings() { return {rings.data(), ring_count}; }
    double rest_z(const TaskGeometry& geometry) const { return ground_z + geometry.ring_tube_radius; }
};

struct TaskProgress {
    bool front_transferred = false;
    bool back_transferred = false;
    bool complete = false;
};

/// Initial world: rings resting on their source pegs, grippers open at home.
WorldState make_world(const TaskGeometry& geometry, const PegLayout& layout,
                      std::span<const RingSpec> rings, const ArmPair<Vec3>& gripper_home);

struct StepOutcome {
    WorldState world;
    std::vector<ErrorEvent> events;
};

/// Advance the quasi-static world one tick under kinematic gripper commands.
StepOutcome step_world(const WorldState& world, const TaskGeometry& geometry,
                       const Pose& left_cmd, const Pose& right_cmd, double dt);

/// Error events implied by two consecutive world states.
std::vector<ErrorEvent> detect_errors(const WorldState& prev, const WorldState& next, double dt);

int weighted_error(std::span<const ErrorEvent> events);

TaskProgress task_progress(const WorldState& world);
bool task_complete(const WorldState& world);

/// Shortest distance from a point to the ring's tube centerline circle.
double distance_to_rim(const Vec3& point, const RingModel& ring, const TaskGeometry& geometry);

bool held_by(const RingModel& ring, Arm arm);
bool is_held(const RingModel& ring);

/// Whether `from -> to` is an edge of the ring state machine.
bool legal_transition(RingState from, RingState to);

}  // namespace telescale
