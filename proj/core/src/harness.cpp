#include "telescale/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "telescale/error.hpp"
#include "telescale/operators.hpp"

namespace telescale {
namespace {

std::optional<ProximityModel> proximity_for(const Scenario& s) {
    if (!std::holds_alternative<PositionalScaling>(s.scaling)) return std::nullopt;
    return ProximityModel(s.task.layout, s.projection, s.distance);
}

}  // namespace

TrialSimulation::TrialSimulation(const Scenario& scenario)
    : initial_(make_world(scenario.task)),
      pipeline_(scenario.clock(), scenario.scaling, proximity_for(scenario), scenario.task.geometry, initial_),
      timeout_ticks_(scenario.clock().ticks_for(scenario.timeout_s)) {}

const WorldState& TrialSimulation::step(const ArmPair<Pose>& master) {
    const auto tick = pipeline_.step(master);
    last_events_ = tick.events;
    for (const auto& e : last_events_) {
        events_.push_back(e);
        weighted_error_ += e.weight;
    }
    if (!complete_ && task_complete(pipeline_.world())) {
        complete_ = true;
        completion_tick_ = pipeline_.tick();
    }
    return tick.observed;
}

TrialRecord TrialSimulation::record(const std::string& scenario_id, std::uint64_t seed) const {
    TrialRecord r;
    r.scenario = scenario_id;
    r.seed = seed;
    r.events = events_;
    r.weighted_error = weighted_error_;
    r.timed_out = !complete_;
    const double dt = pipeline_.clock().dt();
    r.completion_time_s = complete_ ? static_cast<double>(*completion_tick_) * dt
                                    : static_cast<double>(tick()) * dt;
    return r;
}

TrialRecord run_trial(const Scenario& scenario, std::uint64_t seed, const TrialOptions& options) {
    scenario.validate();
    TrialSimulation sim(scenario);
    auto op = make_operator(scenario.op, scenario.operator_context(), seed);

    std::ofstream trajectory;
    if (options.trajectory_path) {
        trajectory.open(*options.trajectory_path);
        if (!trajectory) throw IoError("cannot write trajectory " + options.trajectory_path->string());
        trajectory << "tick,left_x,left_y,left_z,right_x,right_y,right_z\n";
    }
    const std::int64_t stride = std::max<std::int64_t>(1, options.trajectory_stride);

    const WorldState* observed = &sim.pipeline().observed();
    while (!sim.finished()) {
        const auto& master = op->step(*observed);
        observed = &sim.step(master);
        if (trajectory.is_open() && sim.tick() % stride == 0) {
            const auto& w = sim.pipeline().world();
            trajectory << sim.tick();
            for (Arm arm : kArms) {
                const Vec3& p = w.grippers[arm].position;
                trajectory << ',' << p.x() << ',' << p.y() << ',' << p.z();
            }
            trajectory << '\n';
        }
    }

    TrialRecord record = sim.record(scenario.id, seed);
    if (options.trajectory_path) record.trajectory_log = options.trajectory_path->string();
    return record;
}

std::vector<TrialRecord> run_study(std::span<const Scenario> conditions, std::span<const std::uint64_t> seeds,
                                   unsigned jobs) {
    if (seeds.empty()) throw ConfigError("a study needs at least one seed");
    if (conditions.empty()) throw ConfigError("a study needs at least one condition");
    for (const auto& c : conditions) c.validate();

    const std::size_t total = conditions.size() * seeds.size();
    std::vector<TrialRecord> records(total);
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, total));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            try {
                records[i] = run_trial(conditions[i / seeds.size()], seeds[i % seeds.size()]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return records;
}

std::vector<std::uint64_t> seed_range(std::size_t n) {
    std::vector<std::uint64_t> seeds(n);
    for (std::size_t i = 0; i < n; ++i) seeds[i] = i + 1;
    return seeds;
}

}  // namespace telescale
