#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <vector>

#include "telescale/harness.hpp"
#include "telescale/report.hpp"
#include "telescale/server.hpp"
#include "telescale/session.hpp"
#include "telescale/websocket.hpp"

using namespace telescale;
using nlohmann::json;

namespace {

struct WsClient {
    explicit WsClient(ws::Connection c) : conn(std::move(c)) {}

    ws::Connection conn;
    std::uint64_t seq = 0;
    std::vector<WireMessage> received;

    void send(MessageType type, json payload = json::object()) {
        conn.send_text(encode(WireMessage{type, ++seq, std::move(payload)}));
    }

    // Reads until `want` accepts a message; gives up after `seconds`.
    std::optional<WireMessage> until(const std::function<bool(const WireMessage&)>& want, double seconds = 10.0) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(seconds);
        while (std::chrono::steady_clock::now() < deadline) {
            const auto text = conn.receive();
            if (!text) return std::nullopt;
            WireMessage m = decode(*text);
            received.push_back(m);
            if (want(m)) return m;
        }
        return std::nullopt;
    }

    std::optional<WireMessage> next(MessageType type, double seconds = 10.0) {
        return until([type](const WireMessage& m) { return m.type == type; }, seconds);
    }
};

}  // namespace

TEST_SUITE("server") {
    TEST_CASE("loopback session: latency over the wire and record/replay") {
        const auto dir = std::filesystem::temp_directory_path() / "telescale-server-test";
        std::filesystem::remove_all(dir);
        ServerOptions options;
        options.port = 0;
        options.session.record_dir = dir;
        options.session.session_id = "loop";
        SessionServer server(builtin_scenario("default"), options);
        server.start();
        REQUIRE(server.port() != 0);

        {
            WsClient c{ws::Connection::connect("127.0.0.1", server.port())};
            c.send(MessageType::Hello, {{"protocol", "telescale/1"}});
            const auto ack = c.next(MessageType::HelloAck);
            REQUIRE(ack.has_value());
            CHECK(ack->payload["protocol"] == "telescale/1");

            c.send(MessageType::Configure,
                   {{"scaling", {{"kind", "constant"}, {"scale_m", 1.0}}}, {"round_trip_delay_s", 0.75}});
            REQUIRE(c.next(MessageType::Configure).has_value());
            c.send(MessageType::Start);
            const auto started = c.next(MessageType::Start);
            REQUIRE(started.has_value());
            const ArmPair<Pose> home = master_from_json(started->payload["master_home"], {});

            // Let a few frames pass, then push the left tool down past the ground.
            REQUIRE(c.next(MessageType::Frame).has_value());
            REQUIRE(c.next(MessageType::Frame).has_value());
            ArmPair<Pose> moved = home;
            moved.left.position += Vec3(0.002, 0.0, -0.0205);
            c.send(MessageType::MasterInput, master_to_json(moved));
            const std::uint64_t input_seq = c.seq;

            const double x0 = make_world(default_task()).grippers.left.position.x();
            const auto shown = c.until([&](const WireMessage& m) {
                return m.type == MessageType::Frame &&
                       m.payload["world"]["grippers"]["left"]["position"][0].get<double>() != x0;
            });
            REQUIRE(shown.has_value());
            CHECK(shown->payload["input_seq"] == input_seq);
            const std::int64_t latency =
                shown->payload["tick"].get<std::int64_t>() - shown->payload["input_tick"].get<std::int64_t>();
            CHECK(latency >= 750);
            CHECK(latency <= 750 + 33);

            // The touch and the first moved frame share a tick, so the event may already be in.
            auto is_event = [](const WireMessage& m) { return m.type == MessageType::Event; };
            std::optional<WireMessage> event;
            if (auto it = std::find_if(c.received.begin(), c.received.end(), is_event); it != c.received.end()) {
                event = *it;
            } else {
                event = c.next(MessageType::Event);
            }
            REQUIRE(event.has_value());
            CHECK(event->payload["event"]["kind"] == "touch_ground");

            c.send(MessageType::Reset);
            REQUIRE(c.next(MessageType::Reset).has_value());
            c.conn.close();
        }

        // The reset closed the trial log; stopping ends the session.
        const auto log_path = dir / "loop-1-trial-1.jsonl";
        server.stop();
        CHECK(server.sessions_served() == 1);
        CHECK(server.last_stats().messages_in >= 5);
        CHECK(server.last_stats().messages_out > 10);

        REQUIRE(std::filesystem::exists(log_path));
        const SessionLog log = read_session_log(log_path);
        CHECK(log.end == SessionEnd::Reset);
        REQUIRE(log.inputs.size() == 1);
        REQUIRE_FALSE(log.events.empty());
        const ReplayResult r = replay_session(log);
        CHECK_FALSE(r.truncated);
        CHECK(r.matches_log);
        CHECK(r.record.events == log.events);
        CHECK(r.record.weighted_error == weighted_error(log.events));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("malformed text gets an error reply and the connection stays up") {
        ServerOptions options;
        options.port = 0;
        SessionServer server(builtin_scenario("default"), options);
        server.start();
        WsClient c{ws::Connection::connect("127.0.0.1", server.port())};
        c.conn.send_text("{ nope");
        const auto err = c.next(MessageType::Error);
        REQUIRE(err.has_value());
        CHECK(err->payload["reset"] == true);
        c.send(MessageType::Hello, {{"protocol", "telescale/1"}});
        CHECK(c.next(MessageType::HelloAck).has_value());
        c.conn.close();
        server.stop();
    }
}
