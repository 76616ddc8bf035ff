#include "telescale/session.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "telescale/error.hpp"
#include "telescale/report.hpp"

namespace telescale {
namespace {

using nlohmann::json;

constexpr std::size_t kHudEvents = 5;

ArmPair<Pose> home_of(const Scenario& s) {
    return {Pose::at(s.task.gripper_home.left), Pose::at(s.task.gripper_home.right)};
}

json header_json(const Scenario& scenario, std::uint64_t seed) {
    return {{"kind", "header"},
            {"protocol", kProtocolVersion},
            {"scenario", scenario_to_json(scenario, "m")},
            {"seed", seed}};
}

json input_json(const LoggedInput& input) {
    return {{"kind", "input"}, {"tick", input.tick}, {"seq", input.seq}, {"master", master_to_json(input.master)}};
}

json frame_json(const LoggedFrame& frame) {
    return {{"kind", "frame"},
            {"tick", frame.tick},
            {"observed_tick", frame.observed_tick},
            {"weighted_error", frame.weighted_error}};
}

SessionEnd session_end_from_string(std::string_view name) {
    for (SessionEnd e : {SessionEnd::Complete, SessionEnd::Timeout, SessionEnd::Reset, SessionEnd::Disconnect}) {
        if (to_string(e) == name) return e;
    }
    throw IoError("unknown session end \"" + std::string(name) + "\"");
}

}  // namespace

std::string_view to_string(SessionEnd end) {
    switch (end) {
        case SessionEnd::Complete: return "complete";
        case SessionEnd::Timeout: return "timeout";
        case SessionEnd::Reset: return "reset";
        case SessionEnd::Disconnect: return "disconnect";
    }
    return "unknown";
}

std::string_view to_string(SessionCore::State state) {
    switch (state) {
        case SessionCore::State::AwaitingHello: return "awaiting_hello";
        case SessionCore::State::Idle: return "idle";
        case SessionCore::State::Running: return "running";
        case SessionCore::State::Done: return "done";
    }
    return "unknown";
}

SessionLog parse_session_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty session log");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw IoError(std::string("unreadable session log header: ") + e.what());
    }
    if (!header.is_object() || header.value("kind", "") != "header") throw IoError("session log lacks a header");
    const std::string protocol = header.value("protocol", "");
    if (protocol != kProtocolVersion) {
        throw IncompatibleLogError("session log protocol \"" + protocol + "\" is not " +
                                   std::string(kProtocolVersion));
    }

    SessionLog log;
    log.protocol = protocol;
    try {
        log.scenario = scenario_from_json(header.at("scenario"));
        log.seed = header.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw IoError(std::string("bad session log header: ") + e.what());
    }

    const ArmPair<Pose> home = home_of(log.scenario);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const json doc = json::parse(line);
            const std::string kind = doc.at("kind").get<std::string>();
            if (kind == "input") {
                LoggedInput input;
                input.tick = doc.at("tick").get<std::int64_t>();
                input.seq = doc.at("seq").get<std::uint64_t>();
                input.master = master_from_json(doc.at("master"), home);
                log.inputs.push_back(input);
            } else if (kind == "frame") {
                log.frames.push_back(LoggedFrame{doc.at("tick").get<std::int64_t>(),
                                                 doc.at("observed_tick").get<std::int64_t>(),
                                                 doc.at("weighted_error").get<int>()});
            } else if (kind == "event") {
                log.events.push_back(event_from_json(doc.at("event")));
            } else if (kind == "end") {
                log.end_tick = doc.at("tick").get<std::int64_t>();
                log.end = session_end_from_string(doc.at("reason").get<std::string>());
            } else if (kind == "record") {
                log.record = record_from_json(doc.at("record"));
            } else {
                break;
            }
        } catch (const std::exception&) {
            // A damaged line ends the readable part of the log.
            log.end_tick.reset();
            log.end.reset();
            log.record.reset();
            break;
        }
    }
    return log;
}

SessionLog read_session_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return parse_session_log(in);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_session_log(std::ostream& out, const SessionLog& log) {
    out << header_json(log.scenario, log.seed).dump() << '\n';
    // Records are merged in tick order; inputs apply before the tick they name.
    std::size_t i = 0;
    std::size_t f = 0;
    std::size_t e = 0;
    while (i < log.inputs.size() || f < log.frames.size() || e < log.events.size()) {
        const std::int64_t ti = i < log.inputs.size() ? log.inputs[i].tick + 1 : INT64_MAX;
        const std::int64_t te = e < log.events.size() ? log.events[e].tick : INT64_MAX;
        const std::int64_t tf = f < log.frames.size() ? log.frames[f].tick : INT64_MAX;
        if (ti <= te && ti <= tf) {
            out << input_json(log.inputs[i++]).dump() << '\n';
        } else if (te <= tf) {
            out << json{{"kind", "event"}, {"event", event_to_json(log.events[e++])}}.dump() << '\n';
        } else {
            out << frame_json(log.frames[f++]).dump() << '\n';
        }
    }
    if (log.end_tick && log.end) {
        out << json{{"kind", "end"}, {"tick", *log.end_tick}, {"reason", to_string(*log.end)}}.dump() << '\n';
    }
    if (log.record) out << json{{"kind", "record"}, {"record", record_to_json(*log.record)}}.dump() << '\n';
}

SessionLogWriter::SessionLogWriter(const std::filesystem::path& path, const Scenario& scenario, std::uint64_t seed)
    : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    line(header_json(scenario, seed));
}

void SessionLogWriter::line(const json& doc) {
    out_ << doc.dump() << '\n';
    if (!out_) throw IoError("failed writing " + path_.string());
}

void SessionLogWriter::input(const LoggedInput& input) { line(input_json(input)); }

void SessionLogWriter::frame(const LoggedFrame& frame) { line(frame_json(frame)); }

void SessionLogWriter::event(const ErrorEvent& event) { line({{"kind", "event"}, {"event", event_to_json(event)}}); }

void SessionLogWriter::finish(std::int64_t end_tick, SessionEnd end, const std::optional<TrialRecord>& record) {
    line({{"kind", "end"}, {"tick", end_tick}, {"reason", to_string(end)}});
    if (record) line({{"kind", "record"}, {"record", record_to_json(*record)}});
    out_.flush();
}

ReplayResult replay_session(const SessionLog& log) {
    if (log.protocol != kProtocolVersion) {
        throw IncompatibleLogError("session log protocol \"" + log.protocol + "\" is not " +
                                   std::string(kProtocolVersion));
    }
    log.scenario.validate();
    TrialSimulation sim(log.scenario);

    ReplayResult result;
    std::int64_t end = 0;
    if (log.end_tick) {
        end = *log.end_tick;
    } else {
        result.truncated = true;
        if (!log.inputs.empty()) end = std::max(end, log.inputs.back().tick + 1);
        if (!log.frames.empty()) end = std::max(end, log.frames.back().tick);
        if (!log.events.empty()) end = std::max(end, log.events.back().tick);
    }

    ArmPair<Pose> held = home_of(log.scenario);
    std::size_t next = 0;
    while (sim.tick() < end && !sim.finished()) {
        while (next < log.inputs.size() && log.inputs[next].tick <= sim.tick()) held = log.inputs[next++].master;
        sim.step(held);
    }
    result.ticks = sim.tick();
    result.record = sim.record(log.scenario.id, log.seed);
    result.matches_log = sim.events() == log.events;
    if (log.record) {
        result.matches_log = result.matches_log && result.record.events == log.record->events &&
                             result.record.weighted_error == log.record->weighted_error &&
                             result.record.timed_out == log.record->timed_out &&
                             result.record.completion_time_s == log.record->completion_time_s;
    }
    return result;
}

SessionCore::SessionCore(Scenario scenario, SessionOptions options)
    : scenario_(std::move(scenario)), options_(std::move(options)) {
    scenario_.validate();
    if (!std::isfinite(options_.frame_rate_hz) || options_.frame_rate_hz <= 0.0) {
        throw ConfigError("frame rate must be positive");
    }
    held_ = home();
}

SessionCore::~SessionCore() {
    try {
        disconnect();
    } catch (...) {
    }
}

ArmPair<Pose> SessionCore::home() const { return home_of(scenario_); }

WireMessage SessionCore::make(MessageType type, json payload) {
    return WireMessage{type, ++out_seq_, std::move(payload)};
}

std::vector<WireMessage> SessionCore::error(const std::string& message, bool reset) {
    if (reset && state_ == State::Running) stop(SessionEnd::Reset);
    if (reset && state_ == State::Done) state_ = State::Idle;
    return {make(MessageType::Error, {{"message", message}, {"reset", reset}})};
}

std::vector<WireMessage> SessionCore::reject(const std::string& reason) { return error(reason, true); }

std::vector<WireMessage> SessionCore::receive(const WireMessage& message) {
    if (in_seq_ && message.seq <= *in_seq_) {
        return error("seq " + std::to_string(message.seq) + " does not increase", true);
    }
    in_seq_ = message.seq;

    if (state_ == State::AwaitingHello && message.type != MessageType::Hello) {
        return error("hello required before " + std::string(to_string(message.type)), false);
    }

    try {
        switch (message.type) {
            case MessageType::Hello: {
                const std::string protocol = message.payload.value("protocol", "");
                if (protocol != kProtocolVersion) {
                    return error("unsupported protocol \"" + protocol + "\"; server speaks " +
                                     std::string(kProtocolVersion),
                                 false);
                }
                if (state_ == State::AwaitingHello) state_ = State::Idle;
                return {make(MessageType::HelloAck, {{"protocol", kProtocolVersion},
                                                     {"scenario", scenario_.id},
                                                     {"rate_hz", scenario_.rate_hz},
                                                     {"round_trip_delay_s", scenario_.round_trip_s},
                                                     {"frame_rate_hz", options_.frame_rate_hz}})};
            }
            case MessageType::Configure: {
                if (state_ == State::Running) return error("configure rejected while a trial is running", false);
                configure(configure_from_json(message.payload));
                return {make(MessageType::Configure, {{"scenario", scenario_.id},
                                                      {"scaling", strategy_to_json(scenario_.scaling)},
                                                      {"round_trip_delay_s", scenario_.round_trip_s},
                                                      {"timeout_s", scenario_.timeout_s},
                                                      {"seed", options_.seed}})};
            }
            case MessageType::Start: {
                if (state_ == State::Running) return error("a trial is already running", false);
                start();
                return {make(MessageType::Start, {{"scenario", scenario_.id},
                                                  {"seed", options_.seed},
                                                  {"master_home", master_to_json(held_)},
                                                  {"frame_ticks", frame_ticks_}})};
            }
            case MessageType::Reset: {
                if (state_ == State::Running) stop(SessionEnd::Reset);
                state_ = State::Idle;
                held_ = home();
                return {make(MessageType::Reset, {{"world", world_to_json(make_world(scenario_.task))}})};
            }
            case MessageType::MasterInput: {
                const ArmPair<Pose> next = master_from_json(message.payload, held_);
                if (state_ != State::Running) return {};
                held_ = next;
                last_input_seq_ = message.seq;
                last_input_tick_ = sim_->tick();
                const LoggedInput input{sim_->tick(), message.seq, held_};
                log_.inputs.push_back(input);
                if (writer_) writer_->input(input);
                return {};
            }
            default:
                return error("clients may not send " + std::string(to_string(message.type)), true);
        }
    } catch (const ProtocolError& e) {
        return error(e.what(), true);
    } catch (const ScenarioError& e) {
        return error(e.what(), false);
    } catch (const ConfigError& e) {
        return error(e.what(), false);
    }
}

void SessionCore::configure(const ConfigureRequest& request) {
    Scenario next = request.scenario ? load_scenario(*request.scenario) : scenario_;
    if (request.scaling) next.scaling = *request.scaling;
    if (request.round_trip_delay_s) next.round_trip_s = *request.round_trip_delay_s;
    if (request.timeout_s) next.timeout_s = *request.timeout_s;
    next.validate();
    scenario_ = std::move(next);
    if (request.seed) options_.seed = *request.seed;
    state_ = State::Idle;
    held_ = home();
}

void SessionCore::start() {
    scenario_.validate();
    sim_ = std::make_unique<TrialSimulation>(scenario_);
    held_ = home();
    frame_ticks_ = std::max<std::int64_t>(1, std::llround(scenario_.rate_hz / options_.frame_rate_hz));
    events_shown_ = 0;
    shown_error_ = 0;
    last_input_tick_ = -1;
    ++trials_;

    log_ = SessionLog{};
    log_.scenario = scenario_;
    log_.seed = options_.seed;
    writer_.reset();
    last_log_path_.reset();
    if (options_.record_dir) {
        std::filesystem::create_directories(*options_.record_dir);
        const auto path =
            *options_.record_dir / (options_.session_id + "-trial-" + std::to_string(trials_) + ".jsonl");
        writer_ = std::make_unique<SessionLogWriter>(path, scenario_, options_.seed);
        last_log_path_ = path;
    }
    state_ = State::Running;
}

void SessionCore::stop(SessionEnd end) {
    if (state_ != State::Running || !sim_) return;
    std::optional<TrialRecord> record;
    if (end == SessionEnd::Complete || end == SessionEnd::Timeout) {
        record = sim_->record(scenario_.id, options_.seed);
        last_record_ = record;
    }
    log_.end_tick = sim_->tick();
    log_.end = end;
    log_.record = record;
    if (writer_) {
        writer_->finish(sim_->tick(), end, record);
        writer_.reset();
    }
    state_ = record ? State::Done : State::Idle;
}

void SessionCore::disconnect() {
    if (state_ == State::Running) stop(SessionEnd::Disconnect);
}

std::vector<WireMessage> SessionCore::tick() {
    if (state_ != State::Running) return {};
    std::vector<WireMessage> out;
    const WorldState& observed = sim_->step(held_);
    for (const auto& e : sim_->last_events()) {
        log_.events.push_back(e);
        if (writer_) writer_->event(e);
    }

    // Events reach the operator with the observation, not before.
    const auto& events = sim_->events();
    while (events_shown_ < events.size() && events[events_shown_].tick <= observed.tick) {
        const ErrorEvent& e = events[events_shown_++];
        shown_error_ += e.weight;
        out.push_back(make(MessageType::Event, {{"event", event_to_json(e)}, {"weighted_error", shown_error_}}));
    }

    if (sim_->tick() % frame_ticks_ == 0) {
        json recent = json::array();
        const std::size_t first = events_shown_ > kHudEvents ? events_shown_ - kHudEvents : 0;
        for (std::size_t i = first; i < events_shown_; ++i) recent.push_back(event_to_json(events[i]));
        const double dt = sim_->pipeline().clock().dt();
        out.push_back(make(MessageType::Frame,
                           {{"tick", sim_->tick()},
                            {"observed_tick", observed.tick},
                            {"world", world_to_json(observed)},
                            {"input_seq", last_input_seq_},
                            {"input_tick", last_input_tick_},
                            {"hud",
                             {{"elapsed_s", static_cast<double>(observed.tick) * dt},
                              {"weighted_error", shown_error_},
                              {"last_events", recent}}}}));
        const LoggedFrame frame{sim_->tick(), observed.tick, shown_error_};
        log_.frames.push_back(frame);
        if (writer_) writer_->frame(frame);
    }

    if (sim_->finished()) {
        const SessionEnd end = sim_->complete() ? SessionEnd::Complete : SessionEnd::Timeout;
        stop(end);
        out.push_back(make(MessageType::TrialDone,
                           {{"end", to_string(end)}, {"record", record_to_json(*last_record_)}}));
    }
    return out;
}

}  // namespace telescale
