#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "telescale/delay_line.hpp"
#include "telescale/harness.hpp"
#include "telescale/plane.hpp"
#include "telescale/scenario.hpp"

using namespace telescale;

namespace {

void BM_DelayLineStep(benchmark::State& state) {
    DelayLine<double> line(375);
    double x = 0.0;
    for (auto _ : state) {
        x += 1.0;
        benchmark::DoNotOptimize(line.step(x));
    }
}
BENCHMARK(BM_DelayLineStep);

void BM_PlaneFit(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 0.1);
    std::vector<PegLayout> layouts(256);
    for (auto& l : layouts) {
        for (auto& c : l.centers) c = Vec3(u(rng), u(rng), 0.01 * u(rng));
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_plane(layouts[i++ % layouts.size()]));
    }
}
BENCHMARK(BM_PlaneFit);

// One simulated millisecond: both arm channels, the world step and error detection.
void BM_SimulationTick(benchmark::State& state) {
    Scenario s = builtin_scenario(state.range(0) == 0 ? "const-0.2" : state.range(0) == 1 ? "positional" : "velocity");
    TrialSimulation sim(s);
    ArmPair<Pose> master{Pose::at(s.task.gripper_home.left), Pose::at(s.task.gripper_home.right)};
    double phase = 0.0;
    for (auto _ : state) {
        phase += 1e-3;
        master.left.position.x() = s.task.gripper_home.left.x() + 0.005 * std::sin(phase);
        benchmark::DoNotOptimize(sim.step(master));
    }
}
BENCHMARK(BM_SimulationTick)->Arg(0)->Arg(1)->Arg(2);

void BM_Trial(benchmark::State& state) {
    const Scenario s = builtin_scenario("const-0.2");
    std::uint64_t seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_trial(s, seed++));
    }
}
BENCHMARK(BM_Trial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
