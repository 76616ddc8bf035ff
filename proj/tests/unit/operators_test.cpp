#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "telescale/harness.hpp"
#include "telescale/operators.hpp"
#include "telescale/scenario.hpp"

using namespace telescale;

namespace {

struct Reach {
    std::vector<double> distance;  // true slave distance to the goal, per tick
    std::vector<double> along;     // signed progress past the goal along the approach direction
    std::int64_t arrival = -1;     // first tick the operator saw itself arrive
    std::vector<ErrorEvent> events;
    bool done = false;
};

// One fine reach by the left arm, closed through the delayed pipeline.
Reach run_reach(Scenario s, const Vec3& offset, double seconds, std::uint64_t seed = 1) {
    const Vec3 start = s.task.gripper_home.left;
    const Vec3 goal = start + offset;
    Waypoint w;
    w.arm = Arm::Left;
    w.frame = TargetFrame::Absolute;
    w.target = goal;
    w.precision = Precision::Fine;
    w.settle = true;
    w.label = "reach";
    OperatorContext context = s.operator_context();
    context.script = WaypointPlan{{w}, {}};
    auto op = make_operator(s.op, context, seed);
    TrialSimulation sim(s);

    Reach r;
    const Vec3 dir = offset.normalized();
    const WorldState* observed = &sim.pipeline().observed();
    const auto ticks = static_cast<std::int64_t>(seconds * s.rate_hz);
    for (std::int64_t n = 0; n < ticks; ++n) {
        observed = &sim.step(op->step(*observed));
        const Vec3 p = sim.pipeline().world().grippers.left.position;
        r.distance.push_back((p - goal).norm());
        r.along.push_back((p - goal).dot(dir));
        if (r.arrival < 0 && op->done()) r.arrival = n;
    }
    r.events = sim.events();
    r.done = op->done();
    return r;
}

double overshoot(const Reach& r) { return std::max(0.0, *std::max_element(r.along.begin(), r.along.end())); }

Scenario quiet(double round_trip_s) {
    Scenario s = builtin_scenario("default");
    s.round_trip_s = round_trip_s;
    auto& op = std::get<PursuitConfig>(s.op);
    op.noise_std = 0.0;
    op.participant_spread = 0.0;
    return s;
}

const Waypoint* find_step(const WaypointPlan& plan, const std::string& label) {
    for (const auto& w : plan.steps) {
        if (w.label == label) return &w;
    }
    return nullptr;
}

}  // namespace

TEST_SUITE("operators") {
    TEST_CASE("default plan has two ring sub-plans meeting at the board center") {
        const Scenario s = builtin_scenario("default");
        const WaypointPlan plan = plan_waypoints(s.task, s.plan);
        REQUIRE(plan.ring_starts.size() == 2);
        CHECK(plan.ring_starts[0] == 0);
        CHECK(plan.steps[plan.ring_starts[0]].ring == 0);
        CHECK(plan.steps[plan.ring_starts[1]].ring == 1);
        const Waypoint* carry = find_step(plan, "carry");
        REQUIRE(carry != nullptr);
        CHECK(carry->frame == TargetFrame::RingAt);
        CHECK(carry->target.x() == doctest::Approx(0.05));
        CHECK(plan.steps.front().arm == Arm::Left);

        // Grasp, hand-off and place in that order within each sub-plan.
        std::vector<std::string> order;
        for (const auto& w : plan.steps) {
            if (w.label == "grasp" || w.label == "receive" || w.label == "place") order.push_back(w.label);
        }
        const std::vector<std::string> expected{"grasp", "receive", "place", "grasp", "receive", "place"};
        CHECK(order == expected);
    }

    TEST_CASE("mirrored plan swaps the arms") {
        const Scenario d = builtin_scenario("default");
        const Scenario m = builtin_scenario("mirrored");
        const WaypointPlan a = plan_waypoints(d.task, d.plan);
        const WaypointPlan b = plan_waypoints(m.task, m.plan);
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t i = 0; i < a.steps.size(); ++i) {
            CHECK(a.steps[i].label == b.steps[i].label);
            CHECK(b.steps[i].arm == other(a.steps[i].arm));
        }
    }

    TEST_CASE("one-ring plan has a single sub-plan") {
        const Scenario s = builtin_scenario("one_ring");
        const WaypointPlan plan = plan_waypoints(s.task, s.plan);
        CHECK(plan.ring_starts.size() == 1);
        for (const auto& w : plan.steps) CHECK(w.ring == 0);
    }

    TEST_CASE("noise-free pursuit at zero delay converges monotonically") {
        const Reach r = run_reach(quiet(0.0), Vec3(0.004, 0.002, 0.0), 20.0);
        CHECK(r.done);
        CHECK(r.events.empty());
        CHECK(r.distance.back() < std::get<PursuitConfig>(quiet(0.0).op).arrival_tolerance);
        // Skip the reaction-time transient, then require non-increasing distance.
        const std::size_t transient = 300;
        double worst_rise = 0.0;
        for (std::size_t n = transient + 1; n < r.distance.size(); ++n) {
            worst_rise = std::max(worst_rise, r.distance[n] - r.distance[n - 1]);
        }
        CHECK(worst_rise <= 1e-15);
        CHECK(overshoot(r) == 0.0);
    }

    TEST_CASE("delay makes pursuit overshoot with the same gains") {
        // Caution adapts the speed caps to the delay, so it is off in both runs.
        auto same_gains = [](double round_trip_s) {
            Scenario s = quiet(round_trip_s);
            auto& op = std::get<PursuitConfig>(s.op);
            op.fine_caution = 0.0;
            op.gross_caution = 0.0;
            return s;
        };
        const Reach fast = run_reach(same_gains(0.0), Vec3(0.004, 0.002, 0.0), 30.0);
        const Reach slow = run_reach(same_gains(0.75), Vec3(0.004, 0.002, 0.0), 30.0);
        CHECK(slow.done);
        CHECK(overshoot(slow) > overshoot(fast));
        CHECK(overshoot(slow) > 0.0);
    }

    TEST_CASE("move and wait holds still while waiting") {
        Scenario s = builtin_scenario("move_and_wait");
        s.round_trip_s = 0.75;
        const auto& cfg = std::get<MoveAndWaitConfig>(s.op);
        OperatorContext context = s.operator_context();
        Waypoint w;
        w.arm = Arm::Left;
        w.target = s.task.gripper_home.left + Vec3(0.01, 0.0, 0.0);
        w.precision = Precision::Fine;
        context.script = WaypointPlan{{w}, {}};
        MoveAndWaitOperator op(context, cfg, 1);
        CHECK(op.wait_time() >= 0.75);

        TrialSimulation sim(s);
        const WorldState* observed = &sim.pipeline().observed();
        bool saw_wait = false;
        int moving_ticks = 0;
        double moved = 0.0;
        Vec3 master_before = op.master().left.position;
        for (int n = 0; n < 3000; ++n) {
            const Vec3 before = op.master().left.position;
            observed = &sim.step(op.step(*observed));
            const Vec3 inc = op.master().left.position - before;
            if (op.waiting(Arm::Left) && inc.norm() == 0.0) saw_wait = true;
            if (inc.norm() > 0.0) ++moving_ticks;
            // The first move ends when the operator starts waiting.
            if (saw_wait && moved == 0.0) moved = (op.master().left.position - master_before).norm();
        }
        CHECK(saw_wait);
        CHECK(moving_ticks > 0);
        // A fine step covers step_size of slave motion at the constant 0.2 gain.
        CHECK(moved * 0.2 == doctest::Approx(cfg.step_size).epsilon(1e-6));
    }

    TEST_CASE("move and wait does not oscillate when it waits out the round trip") {
        Scenario s = builtin_scenario("move_and_wait");
        s.round_trip_s = 0.75;
        const auto& cfg = std::get<MoveAndWaitConfig>(s.op);
        const Reach r = run_reach(s, Vec3(0.006, 0.0, 0.0), 60.0);
        REQUIRE(r.done);
        REQUIRE(r.arrival >= 0);
        double excursion = 0.0;
        for (std::size_t n = static_cast<std::size_t>(r.arrival); n < r.distance.size(); ++n) {
            excursion = std::max(excursion, r.distance[n]);
        }
        CHECK(excursion < cfg.arrival_tolerance);
        CHECK(overshoot(r) < cfg.arrival_tolerance);
    }

    TEST_CASE("pursuit operator is deterministic per seed") {
        Scenario s = builtin_scenario("default");
        s.round_trip_s = 0.75;
        const Reach a = run_reach(s, Vec3(0.004, 0.0, 0.0), 10.0, 42);
        const Reach b = run_reach(s, Vec3(0.004, 0.0, 0.0), 10.0, 42);
        const Reach c = run_reach(s, Vec3(0.004, 0.0, 0.0), 10.0, 43);
        CHECK(a.distance == b.distance);
        CHECK(a.distance != c.distance);
    }

    TEST_CASE("default tuning completes at zero delay without errors") {
        const Scenario s = builtin_scenario("default");
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const TrialRecord r = run_trial(s, seed);
            CHECK_FALSE(r.timed_out);
            CHECK(r.weighted_error == 0);
            CHECK(r.completion_time_s < 120.0);
        }
    }

    TEST_CASE("delay raises the mean weighted error") {
        Scenario at0 = builtin_scenario("const-0.3");
        Scenario at750 = at0;
        at750.round_trip_s = 0.75;
        const auto seeds = seed_range(8);
        const std::vector<Scenario> conditions{at0, at750};
        const auto records = run_study(conditions, seeds);
        double e0 = 0.0;
        double e750 = 0.0;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            e0 += records[i].weighted_error;
            e750 += records[seeds.size() + i].weighted_error;
        }
        CHECK(e750 > e0);
    }

    TEST_CASE("invalid operator settings are rejected") {
        PursuitConfig p;
        p.gain = 0.0;
        CHECK_THROWS(p.validate());
        MoveAndWaitConfig m;
        m.wait_time = 0.1;
        CHECK_THROWS(m.validate(make_clock(1000.0, 0.75)));
    }
}
