#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telescale/peg_task.hpp"
#include "telescale/pipeline.hpp"
#include "telescale/scenario.hpp"

namespace telescale {

struct TrialRecord {
    std::string scenario;
    std::uint64_t seed = 0;
    /// Seconds to completion; equals the timeout when timed_out.
    double completion_time_s = 0.0;
    bool timed_out = false;
    std::vector<ErrorEvent> events;
    int weighted_error = 0;
    /// Trajectory file written for this trial, empty when none was requested.
    std::string trajectory_log;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// World plus pipeline for one scenario, stepped with externally supplied
/// master poses. Shared by batch trials, the live session and replay.
class TrialSimulation {
public:
    explicit TrialSimulation(const Scenario& scenario);

    /// Advances one tick; returns the operator's delayed observation.
    const WorldState& step(const ArmPair<Pose>& master);

    bool complete() const { return complete_; }
    std::optional<std::int64_t> completion_tick() const { return completion_tick_; }
    bool timed_out() const { return pipeline_.tick() >= timeout_ticks_ && !complete_; }
    bool finished() const { return complete_ || timed_out(); }
    std::int64_t tick() const { return pipeline_.tick(); }
    std::int64_t timeout_ticks() const { return timeout_ticks_; }
    double elapsed_s() const { return static_cast<double>(tick()) * pipeline_.clock().dt(); }

    const std::vector<ErrorEvent>& events() const { return events_; }
    const std::vector<ErrorEvent>& last_events() const { return last_events_; }
    int weighted_error() const { return weighted_error_; }
    const TeleopPipeline& pipeline() const { return pipeline_; }
    const WorldState& initial() const { return initial_; }

    TrialRecord record(const std::string& scenario_id, std::uint64_t seed) const;

private:
    WorldState initial_;
    TeleopPipeline pipeline_;
    std::int64_t timeout_ticks_;
    bool complete_ = false;
    std::optional<std::int64_t> completion_tick_;
    std::vector<ErrorEvent> events_;
    std::vector<ErrorEvent> last_events_;
    int weighted_error_ = 0;
};

struct TrialOptions {
    /// When set, true slave positions are written there as CSV.
    std::optional<std::filesystem::path> trajectory_path;
    std::int64_t trajectory_stride = 10;
};

/// Closed-loop run of the scenario's synthetic operator to completion or timeout.
TrialRecord run_trial(const Scenario& scenario, std::uint64_t seed, const TrialOptions& options = {});

/// Every (condition, seed) pair, condition-major. The same seed is used across
/// conditions so seeds act as paired participants. jobs = 0 picks the hardware
/// concurrency; results do not depend on it.
std::vector<TrialRecord> run_study(std::span<const Scenario> conditions, std::span<const std::uint64_t> seeds,
                                   unsigned jobs = 0);

/// Seeds 1..n.
std::vector<std::uint64_t> seed_range(std::size_t n);

}  // namespace telescale
