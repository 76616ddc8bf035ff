#include "telescale/peg_task.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "telescale/error.hpp"

namespace telescale {
namespace {

double horizontal_distance(const Vec3& a, const Vec3& b) {
    return std::hypot(a.x() - b.x(), a.y() - b.y());
}

RingState held_state(Arm arm) { return arm == Arm::Left ? RingState::HeldLeft : RingState::HeldRight; }

std::string ring_source(const RingModel& ring) { return "ring_" + std::string(to_string(ring.id)); }

std::string gripper_source(Arm arm) { return "gripper_" + std::string(to_string(arm)); }

bool peg_present(const PegModel& peg) { return peg.state != PegState::KnockedDown; }

// Clamp the ring laterally into the slack around a peg axis and keep it off
// the ground; returns the constrained center and the excess (stretch).
struct Constrained {
    Vec3 center;
    double stretch;
};

Constrained constrain_to_peg(const Vec3& desired, const PegModel& peg, double slack, double rest_z) {
    Constrained out{desired, 0.0};
    Eigen::Vector2d lateral(desired.x() - peg.center.x(), desired.y() - peg.center.y());
    const double rho = lateral.norm();
    double excess = 0.0;
    if (rho > slack) {
        excess = rho - slack;
        lateral *= slack / rho;
    }
    out.center.x() = peg.center.x() + lateral.x();
    out.center.y() = peg.center.y() + lateral.y();
    double excess_z = 0.0;
    if (desired.z() < rest_z) {
        excess_z = rest_z - desired.z();
        out.center.z() = rest_z;
    }
    out.stretch = std::hypot(excess, excess_z);
    return out;
}

void rest_on_peg(RingModel& ring, int peg_index, const PegModel& peg, double rest_z) {
    ring.state = RingState::OnPeg;
    ring.peg = peg_index;
    ring.threaded = -1;
    ring.blocked_on = -1;
    ring.center = Vec3(peg.center.x(), peg.center.y(), rest_z);
}

}  // namespace

void TaskGeometry::validate() const {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(peg_radius) || !positive(peg_height) || !positive(ring_inner_radius) ||
        !positive(ring_tube_radius) || !positive(grasp_radius) || !positive(stretch_threshold) ||
        !positive(peg_move_threshold) || !positive(peg_topple_threshold) || !positive(fall_speed)) {
        throw ConfigError("task geometry dimensions must be positive");
    }
    if (!(gripper_radius >= 0.0) || !(ground_tolerance >= 0.0)) {
        throw ConfigError("gripper radius and ground tolerance must be non-negative");
    }
    if (ring_inner_radius <= peg_radius) {
        throw ConfigError("ring inner radius must exceed peg radius");
    }
    if (peg_move_threshold > peg_topple_threshold) {
        throw ConfigError("peg move threshold must not exceed the topple threshold");
    }
    if (!(workspace_min.array() < workspace_max.array()).all()) {
        throw ConfigError("workspace box is empty");
    }
}

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::TouchPeg: return "touch_peg";
        case ErrorKind::TouchGround: return "touch_ground";
        case ErrorKind::StretchHandoffShort: return "stretch_handoff_short";
        case ErrorKind::DropRing: return "drop_ring";
        case ErrorKind::StretchOnPegShort: return "stretch_on_peg_short";
        case ErrorKind::StretchAdditionalSecond: return "stretch_additional_second";
        case ErrorKind::StretchOrMovePeg: return "stretch_or_move_peg";
        case ErrorKind::KnockDownPeg: return "knock_down_peg";
    }
    return "unknown";
}

ErrorKind error_kind_from_string(std::string_view name) {
    for (ErrorKind kind : kAllErrorKinds) {
        if (to_string(kind) == name) return kind;
    }
    throw ConfigError("unknown error kind '" + std::string(name) + "'");
}

std::string_view to_string(RingState state) {
    switch (state) {
        case RingState::OnPeg: return "on_peg";
        case RingState::HeldLeft: return "held_left";
        case RingState::HeldRight: return "held_right";
        case RingState::HeldBoth: return "held_both";
        case RingState::OnGround: return "on_ground";
        case RingState::Falling: return "falling";
    }
    return "unknown";
}

std::string_view to_string(RingId id) { return id == RingId::Front ? "front" : "back"; }

RingId ring_id_from_string(std::string_view name) {
    if (name == "front") return RingId::Front;
    if (name == "back") return RingId::Back;
    throw ConfigError("unknown ring id '" + std::string(name) + "'");
}

std::string_view to_string(PegState state) {
    switch (state) {
        case PegState::Upright: return "upright";
        case PegState::Displaced: return "displaced";
        case PegState::KnockedDown: return "knocked_down";
    }
    return "unknown";
}

ErrorEvent ErrorEvent::make(ErrorKind kind, std::int64_t tick, std::string source) {
    return ErrorEvent{kind, tick, telescale::weight(kind), std::move(source)};
}

bool held_by(const RingModel& ring, Arm arm) {
    return ring.state == RingState::HeldBoth || ring.state == held_state(arm);
}

bool is_held(const RingModel& ring) {
    return ring.state == RingState::HeldLeft || ring.state == RingState::HeldRight ||
           ring.state == RingState::HeldBoth;
}

bool legal_transition(RingState from, RingState to) {
    if (from == to) return true;
    switch (from) {
        case RingState::OnPeg:
            return to == RingState::HeldLeft || to == RingState::HeldRight || to == RingState::OnGround;
        case RingState::OnGround:
            return to == RingState::HeldLeft || to == RingState::HeldRight;
        case RingState::HeldLeft:
        case RingState::HeldRight:
            return to == RingState::HeldBoth || to == RingState::Falling || to == RingState::OnPeg;
        case RingState::HeldBoth:
            return to == RingState::HeldLeft || to == RingState::HeldRight;
        case RingState::Falling:
            return to == RingState::OnGround || to == RingState::OnPeg;
    }
    return false;
}

double distance_to_rim(const Vec3& point, const RingModel& ring, const TaskGeometry& geometry) {
    const double rho = horizontal_distance(point, ring.center);
    return std::hypot(rho - geometry.ring_rim_radius(), point.z() - ring.center.z());
}

WorldState make_world(const TaskGeometry& geometry, const PegLayout& layout,
                      std::span<const RingSpec> rings, const ArmPair<Vec3>& gripper_home) {
    geometry.validate();
    layout.validate();
    if (rings.empty() || rings.size() > kMaxRings) {
        throw ConfigError("a task needs one or two rings");
    }

    WorldState world;
    double lowest_top = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < world.pegs.size(); ++i) {
        auto& peg = world.pegs[i];
        peg.center = layout.centers[i];
        peg.radius = geometry.peg_radius;
        peg.height = geometry.peg_height;
        lowest_top = std::min(lowest_top, peg.center.z());
    }
    world.ground_z = lowest_top - geometry.peg_height;

    for (std::size_t i = 0; i < rings.size(); ++i) {
        const auto& wanted = rings[i];
        if (wanted.from_peg < 0 || wanted.from_peg > 3 || wanted.to_peg < 0 || wanted.to_peg > 3 ||
            wanted.from_peg == wanted.to_peg) {
            throw ConfigError("ring source and destination must be distinct pegs 0..3");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (rings[j].from_peg == wanted.from_peg || rings[j].id == wanted.id) {
                throw ConfigError("rings must have distinct ids and source pegs");
            }
        }
        auto& ring = world.rings[i];
        ring.id = wanted.id;
        ring.source_peg = wanted.from_peg;
        ring.dest_peg = wanted.to_peg;
        ring.inner_radius = geometry.ring_inner_radius;
        rest_on_peg(ring, wanted.from_peg, world.pegs[wanted.from_peg], world.rest_z(geometry));
    }
    world.ring_count = rings.size();

    for (Arm arm : kArms) {
        Pose pose = Pose::at(gripper_home[arm]);
        pose.position = pose.position.cwiseMax(geometry.workspace_min).cwiseMin(geometry.workspace_max);
        world.grippers[arm] = pose;
    }
    for (Arm arm : kArms) {
        const Vec3& p = world.grippers[arm].position;
        for (std::size_t i = 0; i < world.pegs.size(); ++i) {
            const auto& peg = world.pegs[i];
            world.gripper_peg_contact[arm][i] =
                horizontal_distance(p, peg.center) < peg.radius + geometry.gripper_radius &&
                p.z() < peg.center.z() + geometry.gripper_radius;
        }
        world.gripper_ground_contact[arm] = p.z() < world.ground_z + geometry.ground_tolerance;
    }
    return world;
}

StepOutcome step_world(const WorldState& prev, const TaskGeometry& g, const Pose& left_cmd,
                       const Pose& right_cmd, double dt) {
    WorldState next = prev;
    next.tick = prev.tick + 1;
    const double rest_z = prev.rest_z(g);
    const double slack = g.ring_slack();

    for (Arm arm : kArms) {
        Pose cmd = arm == Arm::Left ? left_cmd : right_cmd;
        cmd.position = cmd.position.cwiseMax(g.workspace_min).cwiseMin(g.workspace_max);
        next.grippers[arm] = cmd;
    }

    // A ring changes discrete state at most once per tick.
    std::array<bool, kMaxRings> changed{};

    for (std::size_t i = 0; i < next.ring_count; ++i) {
        auto& ring = next.rings[i];
        if (ring.state == RingState::OnPeg && !peg_present(next.pegs[ring.peg])) {
            ring.state = RingState::OnGround;
            ring.peg = -1;
            changed[i] = true;
        }
    }

    // Releases before grasps, so a hand-off resolves over two ticks.
    for (Arm arm : kArms) {
        if (!(prev.grippers[arm].jaw == Jaw::Closed && next.grippers[arm].jaw == Jaw::Open)) continue;
        for (std::size_t i = 0; i < next.ring_count; ++i) {
            auto& ring = next.rings[i];
            if (changed[i] || !held_by(ring, arm)) continue;
            if (ring.state == RingState::HeldBoth) {
                ring.state = held_state(other(arm));
            } else if (ring.threaded >= 0 && peg_present(next.pegs[ring.threaded])) {
                rest_on_peg(ring, ring.threaded, next.pegs[ring.threaded], rest_z);
            } else {
                ring.state = RingState::Falling;
                ring.threaded = -1;
                ring.blocked_on = -1;
            }
            changed[i] = true;
        }
    }

    for (Arm arm : kArms) {
        if (!(prev.grippers[arm].jaw == Jaw::Open && next.grippers[arm].jaw == Jaw::Closed)) continue;
        const Vec3& grip = next.grippers[arm].position;
        int best = -1;
        double best_distance = g.grasp_radius;
        for (std::size_t i = 0; i < next.ring_count; ++i) {
            const auto& ring = next.rings[i];
            if (changed[i] || held_by(ring, arm)) continue;
            const bool graspable = ring.state == RingState::OnPeg || ring.state == RingState::OnGround ||
                                   ring.state == held_state(other(arm));
            if (!graspable) continue;
            const double d = distance_to_rim(grip, ring, g);
            if (d <= best_distance) {
                best_distance = d;
                best = static_cast<int>(i);
            }
        }
        if (best < 0) continue;
        auto& ring = next.rings[best];
        ring.grip_offset[arm] = grip - ring.center;
        if (ring.state == RingState::OnPeg) {
            ring.threaded = ring.peg;
            ring.peg = -1;
            ring.state = held_state(arm);
        } else if (ring.state == RingState::OnGround) {
            ring.state = held_state(arm);
        } else {
            ring.state = RingState::HeldBoth;
        }
        changed[best] = true;
    }

    for (auto& peg : next.pegs) {
        peg.pull = 0.0;
    }

    for (std::size_t i = 0; i < next.ring_count; ++i) {
        auto& ring = next.rings[i];
        const auto& before = prev.rings[i];
        ring.pressing_ground = false;
        if (!is_held(ring)) {
            ring.stretch = 0.0;
            ring.blocked_on = -1;
            continue;
        }

        Vec3 desired;
        double handoff_stretch = 0.0;
        if (ring.state == RingState::HeldBoth) {
            const Vec3 from_left = next.grippers.left.position - ring.grip_offset.left;
            const Vec3 from_right = next.grippers.right.position - ring.grip_offset.right;
            desired = 0.5 * (from_left + from_right);
            handoff_stretch = (from_left - from_right).norm();
        } else {
            const Arm holder = ring.state == RingState::HeldLeft ? Arm::Left : Arm::Right;
            desired = next.grippers[holder].position - ring.grip_offset[holder];
        }

        Vec3 center = desired;
        double peg_stretch = 0.0;
        int pulled = -1;
        const double bottom = desired.z() - g.ring_tube_radius;

        if (ring.threaded >= 0) {
            const auto& peg = next.pegs[ring.threaded];
            if (!peg_present(peg) || bottom > peg.center.z()) {
                ring.threaded = -1;
            }
        }
        if (ring.threaded < 0) {
            ring.blocked_on = -1;
            const double before_bottom = before.center.z() - g.ring_tube_radius;
            for (std::size_t p = 0; p < next.pegs.size(); ++p) {
                const auto& peg = next.pegs[p];
                if (!peg_present(peg) || bottom >= peg.center.z()) continue;
                const bool entered_from_above =
                    before_bottom >= peg.center.z() || before.blocked_on == static_cast<int>(p);
                if (!entered_from_above) continue;
                const double rho = horizontal_distance(desired, peg.center);
                if (rho <= slack) {
                    ring.threaded = static_cast<int>(p);
                    break;
                }
                if (rho < g.ring_outer_radius() + peg.radius) {
                    ring.blocked_on = static_cast<int>(p);
                    center.z() = peg.center.z() + g.ring_tube_radius;
                    peg_stretch = center.z() - desired.z();
                    pulled = static_cast<int>(p);
                    break;
                }
            }
        }
        if (ring.threaded >= 0) {
            const auto constrained = constrain_to_peg(desired, next.pegs[ring.threaded], slack, rest_z);
            center = constrained.center;
            peg_stretch = constrained.stretch;
            pulled = ring.threaded;
        } else if (ring.blocked_on < 0 && desired.z() < rest_z) {
            center.z() = rest_z;
            ring.pressing_ground = desired.z() < rest_z - g.ground_tolerance;
        }
        ring.center = center;
        if (pulled >= 0) {
            next.pegs[pulled].pull = std::max(next.pegs[pulled].pull, peg_stretch);
        }

        ring.stretch = std::max(handoff_stretch, peg_stretch);
        if (ring.stretch > g.stretch_threshold) {
            if (before.stretch_ticks == 0) {
                ring.stretch_kind = peg_stretch > g.stretch_threshold ? StretchKind::OnPeg
                                                                      : StretchKind::Handoff;
            }
        }
    }

    for (std::size_t i = 0; i < next.ring_count; ++i) {
        auto& ring = next.rings[i];
        if (is_held(ring) && ring.stretch > g.stretch_threshold) {
            ring.stretch_ticks = prev.rings[i].stretch_ticks + 1;
            ring.stretch_timer = static_cast<double>(ring.stretch_ticks) * dt;
        } else {
            ring.stretch = is_held(ring) ? ring.stretch : 0.0;
            ring.stretch_ticks = 0;
            ring.stretch_timer = 0.0;
            ring.stretch_kind = StretchKind::None;
        }
    }

    for (std::size_t p = 0; p < next.pegs.size(); ++p) {
        auto& peg = next.pegs[p];
        if (!peg_present(peg)) {
            peg.pull = 0.0;
            peg.over_move_threshold = false;
            continue;
        }
        peg.over_move_threshold = peg.pull > g.peg_move_threshold;
        if (peg.pull > g.peg_topple_threshold) {
            peg.state = PegState::KnockedDown;
            peg.displacement = std::max(peg.displacement, peg.pull);
            peg.over_move_threshold = false;
            for (std::size_t i = 0; i < next.ring_count; ++i) {
                auto& ring = next.rings[i];
                if (ring.threaded == static_cast<int>(p)) ring.threaded = -1;
                if (ring.blocked_on == static_cast<int>(p)) ring.blocked_on = -1;
                if (ring.state == RingState::OnPeg && ring.peg == static_cast<int>(p) && !changed[i]) {
                    ring.state = RingState::OnGround;
                    ring.peg = -1;
                    changed[i] = true;
                }
            }
        } else if (peg.over_move_threshold) {
            if (peg.state == PegState::Upright) peg.state = PegState::Displaced;
            peg.displacement = std::max(peg.displacement, peg.pull);
        }
    }

    for (std::size_t i = 0; i < next.ring_count; ++i) {
        auto& ring = next.rings[i];
        if (ring.state != RingState::Falling || changed[i]) continue;
        const double z = ring.center.z() - g.fall_speed * dt;
        int landed = -1;
        for (std::size_t p = 0; p < next.pegs.size(); ++p) {
            const auto& peg = next.pegs[p];
            if (peg_present(peg) && z - g.ring_tube_radius < peg.center.z() &&
                horizontal_distance(ring.center, peg.center) <= slack) {
                landed = static_cast<int>(p);
                break;
            }
        }
        if (landed >= 0) {
            rest_on_peg(ring, landed, next.pegs[landed], rest_z);
        } else if (z <= rest_z) {
            ring.state = RingState::OnGround;
            ring.center.z() = rest_z;
        } else {
            ring.center.z() = z;
        }
    }

    for (Arm arm : kArms) {
        const Vec3& p = next.grippers[arm].position;
        for (std::size_t i = 0; i < next.pegs.size(); ++i) {
            const auto& peg = next.pegs[i];
            next.gripper_peg_contact[arm][i] =
                peg_present(peg) &&
                horizontal_distance(p, peg.center) < peg.radius + g.gripper_radius &&
                p.z() < peg.center.z() + g.gripper_radius;
        }
        next.gripper_ground_contact[arm] = p.z() < next.ground_z + g.ground_tolerance;
    }

    StepOutcome outcome{next, {}};
    outcome.events = detect_errors(prev, outcome.world, dt);
    return outcome;
}

std::vector<ErrorEvent> detect_errors(const WorldState& prev, const WorldState& next, double dt) {
    std::vector<ErrorEvent> events;
    const std::int64_t tick = next.tick;
    const std::int64_t second = std::max<std::int64_t>(1, std::llround(1.0 / dt));

    for (Arm arm : kArms) {
        for (std::size_t p = 0; p < next.pegs.size(); ++p) {
            if (next.gripper_peg_contact[arm][p] && !prev.gripper_peg_contact[arm][p] &&
                next.pegs[p].state != PegState::KnockedDown) {
                events.push_back(ErrorEvent::make(ErrorKind::TouchPeg, tick, gripper_source(arm)));
            }
        }
        if (next.gripper_ground_contact[arm] && !prev.gripper_ground_contact[arm]) {
            events.push_back(ErrorEvent::make(ErrorKind::TouchGround, tick, gripper_source(arm)));
        }
    }

    for (std::size_t i = 0; i < next.ring_count; ++i) {
        const auto& before = prev.rings[i];
        const auto& after = next.rings[i];
        if (after.pressing_ground && !before.pressing_ground) {
            events.push_back(ErrorEvent::make(ErrorKind::TouchGround, tick, ring_source(after)));
        }
        if (before.state == RingState::Falling && after.state == RingState::OnGround) {
            events.push_back(ErrorEvent::make(ErrorKind::DropRing, tick, ring_source(after)));
        }

        const auto short_kind = [](StretchKind kind) {
            return kind == StretchKind::OnPeg ? ErrorKind::StretchOnPegShort
                                              : ErrorKind::StretchHandoffShort;
        };
        if (after.stretch_ticks > 0) {
            if (after.stretch_ticks == second) {
                events.push_back(ErrorEvent::make(short_kind(after.stretch_kind), tick, ring_source(after)));
            } else if (after.stretch_ticks > second && (after.stretch_ticks - 1) % second == 0) {
                events.push_back(
                    ErrorEvent::make(ErrorKind::StretchAdditionalSecond, tick, ring_source(after)));
            }
        } else if (before.stretch_ticks > 0 && before.stretch_ticks < second) {
            events.push_back(ErrorEvent::make(short_kind(before.stretch_kind), tick, ring_source(after)));
        }
    }

    for (std::size_t p = 0; p < next.pegs.size(); ++p) {
        const auto& before = prev.pegs[p];
        const auto& after = next.pegs[p];
        const std::string source = "peg_" + std::to_string(p);
        if (after.state == PegState::KnockedDown && before.state != PegState::KnockedDown) {
            events.push_back(ErrorEvent::make(ErrorKind::KnockDownPeg, tick, source));
        } else if (after.over_move_threshold && !before.over_move_threshold) {
            events.push_back(ErrorEvent::make(ErrorKind::StretchOrMovePeg, tick, source));
        }
    }
    return events;
}

int weighted_error(std::span<const ErrorEvent> events) {
    return std::accumulate(events.begin(), events.end(), 0,
                           [](int sum, const ErrorEvent& e) { return sum + e.weight; });
}

TaskProgress task_progress(const WorldState& world) {
    TaskProgress progress;
    bool all = world.ring_count > 0;
    for (const auto& ring : world.active_rings()) {
        const bool done = ring.state == RingState::OnPeg && ring.peg == ring.dest_peg &&
                          world.pegs[ring.dest_peg].state != PegState::KnockedDown;
        if (ring.id == RingId::Front) progress.front_transferred = done;
        if (ring.id == RingId::Back) progress.back_transferred = done;
        all = all && done;
    }
    progress.complete = all;
    return progress;
}

bool task_complete(const WorldState& world) { return task_progress(world).complete; }

}  // namespace telescale
