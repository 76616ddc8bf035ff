#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "telescale/peg_task.hpp"
#include "telescale/scenario.hpp"

using namespace telescale;

namespace {

constexpr double kDt = 0.001;

// Drives the world with scripted gripper poses and collects every event.
struct Script {
    TaskGeometry geometry;
    TaskSetup task = default_task();
    WorldState world;
    ArmPair<Pose> cmd;
    std::vector<ErrorEvent> events;
    std::vector<RingState> front_states;

    Script() {
        world = make_world(geometry, task.layout, task.rings, task.gripper_home);
        for (Arm arm : kArms) cmd[arm] = world.grippers[arm];
        front_states.push_back(world.rings[0].state);
    }

    std::vector<ErrorEvent> tick() {
        StepOutcome out = step_world(world, geometry, cmd.left, cmd.right, kDt);
        world = out.world;
        events.insert(events.end(), out.events.begin(), out.events.end());
        if (front_states.back() != world.rings[0].state) front_states.push_back(world.rings[0].state);
        return out.events;
    }

    void hold(int ticks) {
        for (int i = 0; i < ticks; ++i) tick();
    }

    // Straight-line move in 0.1 mm increments.
    void move(Arm arm, const Vec3& to) {
        const Vec3 from = cmd[arm].position;
        const int n = std::max(1, static_cast<int>(std::ceil((to - from).norm() / 1e-4)));
        for (int i = 1; i <= n; ++i) {
            cmd[arm].position = from + (to - from) * (static_cast<double>(i) / n);
            tick();
        }
    }

    void jaw(Arm arm, Jaw state) {
        cmd[arm].jaw = state;
        tick();
    }

    // Grasp ring `ring` at the rim point on the +x (or -x) side of its center.
    void grasp(Arm arm, std::size_t ring, double side = 1.0) {
        const Vec3 c = world.rings[ring].center;
        const Vec3 rim = c + Vec3(side * geometry.ring_rim_radius(), 0.0, 0.0005);
        move(arm, Vec3(rim.x(), rim.y(), 0.01));
        move(arm, rim);
        jaw(arm, Jaw::Closed);
    }

    std::vector<ErrorKind> kinds() const {
        std::vector<ErrorKind> out;
        for (const auto& e : events) out.push_back(e.kind);
        return out;
    }
};

}  // namespace

TEST_SUITE("peg_task") {
    TEST_CASE("weights of every error kind") {
        CHECK(weight(ErrorKind::TouchPeg) == 1);
        CHECK(weight(ErrorKind::TouchGround) == 2);
        CHECK(weight(ErrorKind::StretchHandoffShort) == 2);
        CHECK(weight(ErrorKind::DropRing) == 3);
        CHECK(weight(ErrorKind::StretchOnPegShort) == 4);
        CHECK(weight(ErrorKind::StretchAdditionalSecond) == 4);
        CHECK(weight(ErrorKind::StretchOrMovePeg) == 10);
        CHECK(weight(ErrorKind::KnockDownPeg) == 20);
        for (ErrorKind kind : kAllErrorKinds) {
            CHECK(ErrorEvent::make(kind, 0, "x").weight == weight(kind));
            CHECK(error_kind_from_string(to_string(kind)) == kind);
        }
    }

    TEST_CASE("weighted error sums") {
        CHECK(weighted_error({}) == 0);
        const std::vector<ErrorEvent> a{ErrorEvent::make(ErrorKind::TouchPeg, 1, "g"),
                                        ErrorEvent::make(ErrorKind::DropRing, 2, "r")};
        CHECK(weighted_error(a) == 4);
        const std::vector<ErrorEvent> b{ErrorEvent::make(ErrorKind::StretchOrMovePeg, 1, "p"),
                                        ErrorEvent::make(ErrorKind::KnockDownPeg, 2, "p")};
        CHECK(weighted_error(b) == 30);
    }

    TEST_CASE("weighted error is additive and order independent") {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<std::size_t> pick(0, kAllErrorKinds.size() - 1);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<ErrorEvent> xs;
            std::vector<ErrorEvent> ys;
            for (int i = 0; i < 10; ++i) xs.push_back(ErrorEvent::make(kAllErrorKinds[pick(rng)], i, "a"));
            for (int i = 0; i < 7; ++i) ys.push_back(ErrorEvent::make(kAllErrorKinds[pick(rng)], i, "b"));
            std::vector<ErrorEvent> both = xs;
            both.insert(both.end(), ys.begin(), ys.end());
            CHECK(weighted_error(both) == weighted_error(xs) + weighted_error(ys));
            std::shuffle(both.begin(), both.end(), rng);
            CHECK(weighted_error(both) == weighted_error(xs) + weighted_error(ys));
        }
    }

    TEST_CASE("initial world") {
        Script s;
        CHECK(s.world.ring_count == 2);
        CHECK(s.world.rings[0].state == RingState::OnPeg);
        CHECK(s.world.rings[0].peg == 0);
        CHECK(s.world.rings[1].peg == 1);
        CHECK_FALSE(task_complete(s.world));
    }

    TEST_CASE("motionless world emits nothing") {
        Script s;
        const WorldState before = s.world;
        s.hold(5000);
        CHECK(s.events.empty());
        CHECK(s.world.rings[0].center == before.rings[0].center);
        CHECK(s.world.grippers.left == before.grippers.left);
    }

    TEST_CASE("sweeping through a peg touches it once") {
        Script s;
        s.move(Arm::Left, Vec3(0.020, 0.040, 0.010));
        s.move(Arm::Left, Vec3(0.020, 0.040, -0.005));
        s.move(Arm::Left, Vec3(0.045, 0.040, -0.005));
        REQUIRE(s.events.size() == 1);
        CHECK(s.events[0].kind == ErrorKind::TouchPeg);
        CHECK(s.events[0].weight == 1);
        CHECK(s.events[0].source == "gripper_left");
    }

    TEST_CASE("releasing a ring in free space drops it") {
        Script s;
        s.grasp(Arm::Left, 0);
        CHECK(s.world.rings[0].state == RingState::HeldLeft);
        s.move(Arm::Left, Vec3(0.0335, 0.040, 0.010));
        s.move(Arm::Left, Vec3(0.050, 0.050, 0.010));
        s.jaw(Arm::Left, Jaw::Open);
        s.hold(200);
        CHECK(s.world.rings[0].state == RingState::OnGround);
        CHECK(s.kinds() == std::vector<ErrorKind>{ErrorKind::DropRing});
        CHECK(weighted_error(s.events) == 3);
        const std::vector<RingState> path{RingState::OnPeg, RingState::HeldLeft, RingState::Falling,
                                          RingState::OnGround};
        CHECK(s.front_states == path);
    }

    TEST_CASE("short hand-off stretch") {
        Script s;
        s.grasp(Arm::Left, 0);
        s.move(Arm::Left, Vec3(0.0335, 0.040, 0.010));
        s.move(Arm::Left, Vec3(0.0535, 0.050, 0.010));
        const Vec3 c = s.world.rings[0].center;
        const Vec3 right_rim = c + Vec3(-s.geometry.ring_rim_radius(), 0.0, 0.0005);
        s.move(Arm::Right, right_rim + Vec3(0.0, 0.0, 0.005));
        s.move(Arm::Right, right_rim);
        s.jaw(Arm::Right, Jaw::Closed);
        REQUIRE(s.world.rings[0].state == RingState::HeldBoth);
        REQUIRE(s.events.empty());

        s.cmd.right.position = right_rim - Vec3(0.003, 0.0, 0.0);
        s.hold(800);
        s.cmd.right.position = right_rim;
        s.hold(100);
        CHECK(s.kinds() == std::vector<ErrorKind>{ErrorKind::StretchHandoffShort});
        CHECK(weighted_error(s.events) == 2);
    }

    TEST_CASE("stretch on a peg for 2.5 s") {
        Script s;
        s.grasp(Arm::Left, 0);
        const Vec3 grip = s.cmd.left.position;
        s.cmd.left.position = grip + Vec3(0.004, 0.0, 0.0);
        s.hold(2500);
        s.cmd.left.position = grip;
        s.hold(100);
        const std::vector<ErrorKind> expected{ErrorKind::StretchOnPegShort, ErrorKind::StretchAdditionalSecond,
                                              ErrorKind::StretchAdditionalSecond};
        CHECK(s.kinds() == expected);
        CHECK(weighted_error(s.events) == 12);
    }

    TEST_CASE("pulling a peg past the move threshold") {
        Script s;
        s.grasp(Arm::Left, 0);
        const Vec3 grip = s.cmd.left.position;
        s.cmd.left.position = grip + Vec3(0.006, 0.0, 0.0);
        s.tick();
        CHECK(s.kinds() == std::vector<ErrorKind>{ErrorKind::StretchOrMovePeg});
        CHECK(s.world.pegs[0].state == PegState::Displaced);
    }

    TEST_CASE("pulling a peg past the topple threshold knocks it down") {
        Script s;
        s.grasp(Arm::Left, 0);
        const Vec3 grip = s.cmd.left.position;
        s.cmd.left.position = grip + Vec3(0.010, 0.0, 0.0);
        const auto events = s.tick();
        REQUIRE(events.size() == 1);
        CHECK(events[0].kind == ErrorKind::KnockDownPeg);
        CHECK(events[0].weight == 20);
        CHECK(s.world.pegs[0].state == PegState::KnockedDown);

        // The peg stays down and no longer registers touches.
        s.hold(50);
        s.move(Arm::Right, Vec3(0.030, 0.035, 0.010));
        s.move(Arm::Right, Vec3(0.030, 0.035, -0.005));
        s.move(Arm::Right, Vec3(0.030, 0.045, -0.005));
        CHECK(s.world.pegs[0].state == PegState::KnockedDown);
        CHECK(std::none_of(s.events.begin(), s.events.end(),
                           [](const ErrorEvent& e) { return e.kind == ErrorKind::TouchPeg; }));
    }

    TEST_CASE("scripted transfer of both rings completes the task") {
        Script s;
        const auto transfer = [&](std::size_t ring, int to_peg) {
            s.grasp(Arm::Left, ring);
            const Vec3 offset = s.cmd.left.position - s.world.rings[ring].center;
            const Vec3 dest = s.world.pegs[to_peg].center;
            s.move(Arm::Left, Vec3(s.cmd.left.position.x(), s.cmd.left.position.y(), 0.010));
            s.move(Arm::Left, Vec3(dest.x() + offset.x(), dest.y() + offset.y(), 0.010));
            s.move(Arm::Left, Vec3(dest.x() + offset.x(), dest.y() + offset.y(), -0.008));
            s.jaw(Arm::Left, Jaw::Open);
            s.move(Arm::Left, Vec3(dest.x() + offset.x() + 0.002, dest.y() + offset.y(), -0.008));
            s.move(Arm::Left, Vec3(dest.x() + offset.x() + 0.002, dest.y() + offset.y(), 0.010));
        };
        transfer(0, 2);
        CHECK(task_progress(s.world).front_transferred);
        CHECK_FALSE(task_complete(s.world));
        transfer(1, 3);
        CHECK(task_progress(s.world).back_transferred);
        CHECK(task_complete(s.world));
        CHECK(s.events.empty());
    }

    TEST_CASE("random commands never leave the ring state machine") {
        Script s;
        std::mt19937_64 rng(123456);
        std::normal_distribution<double> step(0.0, 0.0004);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const Vec3 lo(0.015, 0.025, -0.011);
        const Vec3 hi(0.085, 0.075, 0.012);
        std::array<RingState, kMaxRings> last{s.world.rings[0].state, s.world.rings[1].state};
        std::size_t illegal = 0;
        std::array<std::size_t, 6> seen{};
        for (int t = 0; t < 1000000; ++t) {
            for (Arm arm : kArms) {
                Vec3& p = s.cmd[arm].position;
                p += Vec3(step(rng), step(rng), step(rng));
                p = p.cwiseMax(lo).cwiseMin(hi);
                if (u(rng) < 0.002) s.cmd[arm].jaw = s.cmd[arm].jaw == Jaw::Open ? Jaw::Closed : Jaw::Open;
                // Drift toward a ring now and then so grasps actually happen.
                if (u(rng) < 0.001) p = s.world.rings[t % 2].center + Vec3(0.0035, 0.0, 0.0);
            }
            const StepOutcome out = step_world(s.world, s.geometry, s.cmd.left, s.cmd.right, kDt);
            s.world = out.world;
            for (std::size_t i = 0; i < s.world.ring_count; ++i) {
                const RingState now = s.world.rings[i].state;
                if (!legal_transition(last[i], now)) ++illegal;
                last[i] = now;
                ++seen[static_cast<std::size_t>(now)];
            }
        }
        CHECK(illegal == 0);
        // The fuzz reached held and dropped states, not only the start.
        CHECK(seen[static_cast<std::size_t>(RingState::HeldLeft)] + seen[static_cast<std::size_t>(RingState::HeldRight)] > 0);
        CHECK(seen[static_cast<std::size_t>(RingState::OnGround)] > 0);
    }

    TEST_CASE("legal edges") {
        CHECK(legal_transition(RingState::OnPeg, RingState::HeldLeft));
        CHECK(legal_transition(RingState::HeldLeft, RingState::HeldBoth));
        CHECK(legal_transition(RingState::HeldBoth, RingState::HeldRight));
        CHECK(legal_transition(RingState::Falling, RingState::OnGround));
        CHECK_FALSE(legal_transition(RingState::OnPeg, RingState::HeldBoth));
        CHECK_FALSE(legal_transition(RingState::OnGround, RingState::OnPeg));
        CHECK_FALSE(legal_transition(RingState::Falling, RingState::HeldLeft));
    }
}
