#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "telescale/harness.hpp"
#include "telescale/protocol.hpp"
#include "telescale/scenario.hpp"

namespace telescale {

/// Master input as applied by the tick loop: the held pose pair from `tick` on.
struct LoggedInput {
    std::int64_t tick = 0;
    std::uint64_t seq = 0;
    ArmPair<Pose> master;
};

struct LoggedFrame {
    std::int64_t tick = 0;
    std::int64_t observed_tick = 0;
    int weighted_error = 0;
};

enum class SessionEnd : std::uint8_t { Complete, Timeout, Reset, Disconnect };

std::string_view to_string(SessionEnd end);

/// One trial of a live session. Serialized as JSON lines: a header record,
/// then input / frame / event records in tick order, then an end record and,
/// for trials that ran to completion or timeout, the final TrialRecord.
struct SessionLog {
    std::string protocol{kProtocolVersion};
    Scenario scenario;
    std::uint64_t seed = 0;
    std::vector<LoggedInput> inputs;
    std::vector<LoggedFrame> frames;
    std::vector<ErrorEvent> events;
    /// Ticks simulated and why the trial stopped; absent when the log was cut off.
    std::optional<std::int64_t> end_tick;
    std::optional<SessionEnd> end;
    std::optional<TrialRecord> record;
};

/// Throws IncompatibleLogError on a protocol mismatch and IoError when the
/// header is unreadable. A damaged tail stops parsing; the result then has
/// no end record.
SessionLog parse_session_log(std::istream& in);
SessionLog read_session_log(const std::filesystem::path& path);
void write_session_log(std::ostream& out, const SessionLog& log);

/// Appends log records as they happen so an aborted session leaves a
/// readable partial log.
class SessionLogWriter {
public:
    SessionLogWriter(const std::filesystem::path& path, const Scenario& scenario, std::uint64_t seed);

    void input(const LoggedInput& input);
    void frame(const LoggedFrame& frame);
    void event(const ErrorEvent& event);
    void finish(std::int64_t end_tick, SessionEnd end, const std::optional<TrialRecord>& record);

    const std::filesystem::path& path() const { return path_; }

private:
    void line(const nlohmann::json& doc);

    std::filesystem::path path_;
    std::ofstream out_;
};

struct ReplayResult {
    TrialRecord record;
    std::int64_t ticks = 0;
    /// The log ended without an end record; replay stopped at its last entry.
    bool truncated = false;
    /// Events and weighted error equal those the log recorded.
    bool matches_log = true;
};

/// Headless re-run of a session log through TrialSimulation.
ReplayResult replay_session(const SessionLog& log);

struct SessionOptions {
    double frame_rate_hz = 30.0;
    std::uint64_t seed = 0;
    /// Prefix of log file names: <session_id>-trial-<n>.jsonl.
    std::string session_id = "session";
    /// One JSONL file per trial is written here when set.
    std::optional<std::filesystem::path> record_dir;
};

/// Protocol state machine of one operator session, free of I/O and threads.
/// The server feeds it decoded messages and calls tick() at the clock rate;
/// replies and frames come back as messages to send.
class SessionCore {
public:
    enum class State : std::uint8_t { AwaitingHello, Idle, Running, Done };

    explicit SessionCore(Scenario scenario, SessionOptions options = {});
    ~SessionCore();

    std::vector<WireMessage> receive(const WireMessage& message);
    /// A message that failed to decode: error reply, then reset.
    std::vector<WireMessage> reject(const std::string& reason);
    /// Advances the trial by one tick while running.
    std::vector<WireMessage> tick();
    /// Connection lost: a running trial is aborted and its log closed.
    void disconnect();

    State state() const { return state_; }
    const Scenario& scenario() const { return scenario_; }
    const ArmPair<Pose>& held_master() const { return held_; }
    const TrialSimulation* simulation() const { return sim_.get(); }
    const std::optional<TrialRecord>& last_record() const { return last_record_; }
    /// In-memory log of the current or most recent trial.
    const SessionLog& log() const { return log_; }
    std::optional<std::filesystem::path> last_log_path() const { return last_log_path_; }
    std::int64_t frame_ticks() const { return frame_ticks_; }

private:
    WireMessage make(MessageType type, nlohmann::json payload);
    std::vector<WireMessage> error(const std::string& message, bool reset);
    void configure(const ConfigureRequest& request);
    void start();
    void stop(SessionEnd end);
    ArmPair<Pose> home() const;

    Scenario scenario_;
    SessionOptions options_;
    State state_ = State::AwaitingHello;
    std::uint64_t out_seq_ = 0;
    std::optional<std::uint64_t> in_seq_;
    std::uint64_t last_input_seq_ = 0;
    std::int64_t last_input_tick_ = -1;
    std::int64_t frame_ticks_ = 1;
    std::size_t events_shown_ = 0;
    int shown_error_ = 0;
    std::size_t trials_ = 0;
    ArmPair<Pose> held_;
    std::unique_ptr<TrialSimulation> sim_;
    std::unique_ptr<SessionLogWriter> writer_;
    SessionLog log_;
    std::optional<TrialRecord> last_record_;
    std::optional<std::filesystem::path> last_log_path_;
};

std::string_view to_string(SessionCore::State state);

}  // namespace telescale
