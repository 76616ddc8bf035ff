// telescale: trials, studies, live sessions, replay and reports.
//
// Exit codes: 0 ok, 1 usage or runtime error, 2 bad scenario,
// 3 a trial timed out (without --allow-timeout), 4 replay mismatch.

#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "telescale/error.hpp"
#include "telescale/harness.hpp"
#include "telescale/report.hpp"
#include "telescale/scale_map.hpp"
#include "telescale/scenario.hpp"
#include "telescale/server.hpp"
#include "telescale/session.hpp"

namespace {

using namespace telescale;

enum Exit : int { kOk = 0, kError = 1, kBadScenario = 2, kTimeout = 3, kReplayMismatch = 4 };

struct BadScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Scenario load(const std::string& name, std::optional<double> delay_ms) {
    try {
        Scenario s = load_scenario(name);
        if (delay_ms) s.round_trip_s = *delay_ms / 1000.0;
        s.validate();
        return s;
    } catch (const ScenarioError& e) {
        throw BadScenario(e.what());
    } catch (const ConfigError& e) {
        throw BadScenario(name + ": " + e.what());
    } catch (const DegenerateLayoutError& e) {
        throw BadScenario(name + ": " + e.what());
    }
}

struct RunArgs {
    std::string scenario = "default";
    std::uint64_t seed = 1;
    std::optional<double> delay_ms;
    std::string out;
    std::string trajectory;
    bool allow_timeout = false;
};

int cmd_run(const RunArgs& a) {
    const Scenario s = load(a.scenario, a.delay_ms);
    TrialOptions options;
    if (!a.trajectory.empty()) options.trajectory_path = a.trajectory;
    const TrialRecord record = run_trial(s, a.seed, options);
    std::cout << record_to_json(record).dump(2) << '\n';
    if (!a.out.empty()) write_json(a.out, std::span<const TrialRecord>(&record, 1));
    if (record.timed_out && !a.allow_timeout) {
        std::cerr << "trial timed out after " << record.completion_time_s << " s\n";
        return kTimeout;
    }
    return kOk;
}

struct StudyArgs {
    std::string conditions = "preset5";
    std::vector<std::string> scenarios;
    std::size_t seeds = 17;
    double delay_ms = 750.0;
    unsigned jobs = 0;
    std::string out;
    std::string json;
    bool allow_timeout = false;
};

int cmd_study(const StudyArgs& a) {
    std::vector<Scenario> conditions;
    if (!a.scenarios.empty()) {
        for (const auto& name : a.scenarios) conditions.push_back(load(name, a.delay_ms));
    } else {
        try {
            conditions = preset_conditions(a.conditions, a.delay_ms / 1000.0);
        } catch (const ScenarioError& e) {
            throw BadScenario(e.what());
        }
    }
    const auto seeds = seed_range(a.seeds);
    const auto records = run_study(conditions, seeds, a.jobs);
    const auto rows = to_rows(records);
    std::cout << render_table(summarize(rows));
    std::size_t timeouts = 0;
    for (const auto& r : records) timeouts += r.timed_out ? 1 : 0;
    std::cout << records.size() << " trials, " << timeouts << " timed out, round trip " << a.delay_ms << " ms\n";
    if (!a.out.empty()) write_csv(a.out, rows);
    if (!a.json.empty()) write_json(a.json, records);
    return timeouts > 0 && !a.allow_timeout ? kTimeout : kOk;
}

struct ServeArgs {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8765;
    std::string scenario = "default";
    std::optional<double> delay_ms;
    std::string record_dir;
    double frame_rate = 30.0;
};

int cmd_serve(const ServeArgs& a) {
    const Scenario s = load(a.scenario, a.delay_ms);
    ServerOptions options;
    options.host = a.host;
    options.port = a.port;
    options.session.frame_rate_hz = a.frame_rate;
    if (!a.record_dir.empty()) options.session.record_dir = a.record_dir;
    options.status = &std::cerr;

    // Signals are taken synchronously here so server threads never see them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    SessionServer server(s, options);
    server.start();
    int received = 0;
    sigwait(&signals, &received);
    std::cerr << "stopping\n";
    server.stop();
    return kOk;
}

int cmd_replay(const std::string& path) {
    const SessionLog log = read_session_log(path);
    const ReplayResult result = replay_session(log);
    nlohmann::json out = record_to_json(result.record);
    out["ticks"] = result.ticks;
    out["truncated"] = result.truncated;
    out["matches_log"] = result.matches_log;
    std::cout << out.dump(2) << '\n';
    if (result.truncated) std::cerr << "log is truncated; replayed up to tick " << result.ticks << '\n';
    if (!result.matches_log) {
        std::cerr << "replay does not match the recorded events\n";
        return kReplayMismatch;
    }
    return kOk;
}

int cmd_report(const std::string& path) {
    std::cout << render_table(summarize(read_csv(path)));
    return kOk;
}

struct MapArgs {
    std::string scaling = "positional";
    std::string scenario = "default";
    std::string out;
    double step_mm = 1.0;
    double size_mm = 100.0;
};

int cmd_map(const MapArgs& a) {
    if (a.scaling != "positional") {
        std::cerr << "map: only positional scaling has a spatial map\n";
        return kError;
    }
    const Scenario s = load(a.scenario, std::nullopt);
    const auto* configured = std::get_if<PositionalScaling>(&s.scaling);
    const PositionalScaling scaling = configured ? *configured : PositionalScaling{};
    ScaleMapGrid grid;
    grid.x_max = a.size_mm / 1000.0;
    grid.y_max = a.size_mm / 1000.0;
    grid.step = a.step_mm / 1000.0;
    const auto cells = positional_scale_map(s.task.layout, scaling, grid, s.projection, s.distance);
    const std::string csv = scale_map_csv(cells);
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream file(a.out);
        if (!file) throw IoError("cannot write " + a.out);
        file << csv;
    }
    double lo = 1e300;
    double hi = -1e300;
    for (const auto& c : cells) {
        lo = std::min(lo, c.total);
        hi = std::max(hi, c.total);
    }
    std::cerr << cells.size() << " points, master-to-slave gain " << lo << " .. " << hi << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Teleoperation-under-delay simulator and motion-scaling study harness"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run one synthetic-operator trial and print its record");
    run_cmd->add_option("--scenario", run.scenario, "Built-in name or scenario JSON file")->capture_default_str();
    run_cmd->add_option("--seed", run.seed, "Operator seed")->capture_default_str();
    run_cmd->add_option("--delay-ms", run.delay_ms, "Override the round-trip delay");
    run_cmd->add_option("--out", run.out, "Also write the record as JSON");
    run_cmd->add_option("--trajectory", run.trajectory, "Write slave positions as CSV");
    run_cmd->add_flag("--allow-timeout", run.allow_timeout, "Exit 0 even if the trial times out");

    StudyArgs study;
    auto* study_cmd = app.add_subcommand("study", "Run every condition for seeds 1..N and summarize");
    study_cmd->add_option("--conditions", study.conditions, "Condition preset")->capture_default_str();
    study_cmd->add_option("--scenario", study.scenarios, "Scenarios to compare instead of a preset");
    study_cmd->add_option("--seeds", study.seeds, "Number of paired seeds")->capture_default_str()->check(
        CLI::PositiveNumber);
    study_cmd->add_option("--delay-ms", study.delay_ms, "Round-trip delay")->capture_default_str()->check(
        CLI::NonNegativeNumber);
    study_cmd->add_option("--jobs", study.jobs, "Worker threads, 0 for all cores")->capture_default_str();
    study_cmd->add_option("--out", study.out, "Per-trial CSV");
    study_cmd->add_option("--json", study.json, "Full trial records as JSON");
    study_cmd->add_flag("--allow-timeout", study.allow_timeout, "Exit 0 even if some trials time out");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Serve live sessions over WebSocket (telescale/1)");
    serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", serve.port, "TCP port")->capture_default_str();
    serve_cmd->add_option("--scenario", serve.scenario, "Default scenario")->capture_default_str();
    serve_cmd->add_option("--delay-ms", serve.delay_ms, "Override the round-trip delay");
    serve_cmd->add_option("--record-dir", serve.record_dir, "Write one JSONL log per trial here");
    serve_cmd->add_option("--frame-rate", serve.frame_rate, "Frames per second sent to the client")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    std::string replay_log;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a session log headlessly");
    replay_cmd->add_option("log", replay_log, "Session JSONL log")->required();

    std::string report_csv;
    auto* report_cmd = app.add_subcommand("report", "Summary table from a study CSV");
    report_cmd->add_option("csv", report_csv, "CSV written by study --out")->required();

    MapArgs map;
    auto* map_cmd = app.add_subcommand("map", "Grid of positional scale_s values as CSV");
    map_cmd->add_option("--scaling", map.scaling, "Scaling law")->capture_default_str();
    map_cmd->add_option("--scenario", map.scenario, "Peg layout and scaling parameters")->capture_default_str();
    map_cmd->add_option("--out", map.out, "CSV path, stdout when omitted");
    map_cmd->add_option("--step-mm", map.step_mm, "Grid spacing")->capture_default_str()->check(
        CLI::PositiveNumber);
    map_cmd->add_option("--size-mm", map.size_mm, "Grid extent from the origin")->capture_default_str()->check(
        CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kError;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*study_cmd) return cmd_study(study);
        if (*serve_cmd) return cmd_serve(serve);
        if (*replay_cmd) return cmd_replay(replay_log);
        if (*report_cmd) return cmd_report(report_csv);
        if (*map_cmd) return cmd_map(map);
    } catch (const BadScenario& e) {
        std::cerr << "bad scenario: " << e.what() << '\n';
        return kBadScenario;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}
