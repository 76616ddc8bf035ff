#include <doctest.h>

#include <cmath>

#include "telescale/error.hpp"
#include "telescale/protocol.hpp"
#include "telescale/scenario.hpp"
#include "telescale/websocket.hpp"

using namespace telescale;
using nlohmann::json;

TEST_SUITE("protocol") {
    TEST_CASE("messages survive encode and decode") {
        for (MessageType type : {MessageType::Hello, MessageType::HelloAck, MessageType::Configure,
                                 MessageType::Start, MessageType::Reset, MessageType::MasterInput,
                                 MessageType::Frame, MessageType::Event, MessageType::TrialDone,
                                 MessageType::Error}) {
            const WireMessage m{type, 42, {{"x", 1.5}, {"y", {1, 2}}}};
            const WireMessage back = decode(encode(m));
            CHECK(back.type == type);
            CHECK(back.seq == 42);
            CHECK(back.payload == m.payload);
            CHECK(message_type_from_string(to_string(type)) == type);
        }
        CHECK(to_string(MessageType::MasterInput) == "master_input");
        CHECK(to_string(MessageType::TrialDone) == "trial_done");
    }

    TEST_CASE("encoded form is one JSON object") {
        const auto doc = json::parse(encode(WireMessage{MessageType::Hello, 1, {{"protocol", "telescale/1"}}}));
        CHECK(doc["type"] == "hello");
        CHECK(doc["seq"] == 1);
        CHECK(doc["payload"]["protocol"] == "telescale/1");
    }

    TEST_CASE("malformed messages are rejected") {
        CHECK_THROWS_AS(decode("not json"), ProtocolError);
        CHECK_THROWS_AS(decode("[1,2]"), ProtocolError);
        CHECK_THROWS_AS(decode(R"({"seq": 1, "payload": {}})"), ProtocolError);
        CHECK_THROWS_AS(decode(R"({"type": "teleport", "seq": 1, "payload": {}})"), ProtocolError);
        CHECK_THROWS_AS(decode(R"({"type": "hello", "seq": -1, "payload": {}})"), ProtocolError);
        CHECK_THROWS_AS(decode(R"({"type": "hello", "seq": 1.5, "payload": {}})"), ProtocolError);
        CHECK_THROWS_AS(decode(R"({"type": "hello", "seq": 1, "payload": 7})"), ProtocolError);
    }

    TEST_CASE("poses round-trip exactly") {
        Pose p = Pose::at(Vec3(0.0123456789, -0.5, 1e-7), Jaw::Closed);
        p.orientation = Quat(Eigen::AngleAxisd(0.3, Vec3(1.0, 2.0, 3.0).normalized()));
        const Pose back = pose_from_json(json::parse(pose_to_json(p).dump()), Pose{});
        CHECK(back == p);
    }

    TEST_CASE("master input may update one arm") {
        const ArmPair<Pose> held{Pose::at(Vec3(0.01, 0.02, 0.03)), Pose::at(Vec3(0.07, 0.02, 0.03))};
        const json payload = {{"right", {{"position", {0.08, 0.02, 0.03}}, {"jaw", "closed"}}}};
        const ArmPair<Pose> next = master_from_json(payload, held);
        CHECK(next.left == held.left);
        CHECK(next.right.position == Vec3(0.08, 0.02, 0.03));
        CHECK(next.right.jaw == Jaw::Closed);
        CHECK(master_from_json(master_to_json(next), held) == next);

        CHECK_THROWS_AS(master_from_json({{"middle", json::object()}}, held), ProtocolError);
        CHECK_THROWS_AS(master_from_json({{"left", {{"position", {1, 2}}}}}, held), ProtocolError);
        CHECK_THROWS_AS(master_from_json({{"left", {{"jaw", "ajar"}}}}, held), ProtocolError);
        CHECK_THROWS_AS(master_from_json({{"left", {{"orientation", {0, 0, 0, 0}}}}}, held), ProtocolError);
    }

    TEST_CASE("world snapshot carries pegs, rings and grippers") {
        const WorldState w = make_world(default_task());
        const json doc = world_to_json(w);
        CHECK(doc["pegs"].size() == 4);
        CHECK(doc["pegs"][2]["center"][0].get<double>() == doctest::Approx(0.07));
        CHECK(doc["rings"].size() == 2);
        CHECK(doc["rings"][0]["state"] == "on_peg");
        CHECK(doc["grippers"]["left"]["position"][0].get<double>() == doctest::Approx(0.015));
    }

    TEST_CASE("configure payload") {
        const json payload = {{"scaling", {{"kind", "velocity"}, {"v1", 0.1}, {"v2", 100.0}}},
                              {"round_trip_delay_s", 0.75},
                              {"seed", 3}};
        const ConfigureRequest r = configure_from_json(payload);
        REQUIRE(r.scaling.has_value());
        CHECK(std::get<VelocityScaling>(*r.scaling).v2 == 100.0);
        CHECK(r.round_trip_delay_s == 0.75);
        CHECK(r.seed == 3u);
        CHECK_FALSE(r.scenario.has_value());
        CHECK(configure_from_json(configure_to_json(r)).round_trip_delay_s == 0.75);

        CHECK_THROWS_AS(configure_from_json({{"delay", 0.75}}), ProtocolError);
        CHECK_THROWS_AS(configure_from_json({{"scaling", {{"kind", "constant"}, {"scale_m", 0.0}}}}), ProtocolError);
        CHECK_THROWS_AS(configure_from_json({{"round_trip_delay_s", "slow"}}), ProtocolError);
        CHECK_THROWS_AS(configure_from_json({{"seed", -1}}), ProtocolError);
        CHECK_THROWS_AS(configure_from_json({{"seed", 1.5}}), ProtocolError);
    }

    TEST_CASE("websocket accept key") {
        CHECK(ws::accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
    }
}
