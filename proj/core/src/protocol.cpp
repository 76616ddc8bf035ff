#include "telescale/protocol.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "telescale/error.hpp"
#include "telescale/scenario.hpp"

namespace telescale {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<MessageType, std::string_view>, 10> kNames{{
    {MessageType::Hello, "hello"},
    {MessageType::HelloAck, "hello_ack"},
    {MessageType::Configure, "configure"},
    {MessageType::Start, "start"},
    {MessageType::Reset, "reset"},
    {MessageType::MasterInput, "master_input"},
    {MessageType::Frame, "frame"},
    {MessageType::Event, "event"},
    {MessageType::TrialDone, "trial_done"},
    {MessageType::Error, "error"},
}};

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& doc, const char* what) {
    if (!doc.is_array() || doc.size() != 3) throw ProtocolError(std::string(what) + ": expected [x, y, z]");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        if (!doc[i].is_number()) throw ProtocolError(std::string(what) + ": expected numbers");
        out[i] = doc[i].get<double>();
        if (!std::isfinite(out[i])) throw ProtocolError(std::string(what) + ": non-finite value");
    }
    return out;
}

std::optional<double> number(const json& payload, const char* key) {
    if (!payload.contains(key) || payload.at(key).is_null()) return std::nullopt;
    if (!payload.at(key).is_number()) throw ProtocolError(std::string("configure.") + key + ": expected a number");
    return payload.at(key).get<double>();
}

}  // namespace

std::string_view to_string(MessageType type) {
    for (const auto& [t, name] : kNames) {
        if (t == type) return name;
    }
    return "unknown";
}

MessageType message_type_from_string(std::string_view name) {
    for (const auto& [t, n] : kNames) {
        if (n == name) return t;
    }
    throw ProtocolError("unknown message type \"" + std::string(name) + "\"");
}

std::string encode(const WireMessage& message) {
    json doc = {{"type", to_string(message.type)}, {"seq", message.seq}, {"payload", message.payload}};
    return doc.dump();
}

WireMessage decode(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ProtocolError("message must be a JSON object");
    if (!doc.contains("type") || !doc.at("type").is_string()) throw ProtocolError("message needs a string type");
    if (!doc.contains("seq") || !doc.at("seq").is_number_unsigned()) {
        throw ProtocolError("message needs a non-negative integer seq");
    }
    WireMessage m;
    m.type = message_type_from_string(doc.at("type").get<std::string>());
    m.seq = doc.at("seq").get<std::uint64_t>();
    if (doc.contains("payload") && !doc.at("payload").is_null()) {
        if (!doc.at("payload").is_object()) throw ProtocolError("payload must be an object");
        m.payload = doc.at("payload");
    }
    return m;
}

json pose_to_json(const Pose& pose) {
    const Quat& q = pose.orientation;
    return {{"position", vec(pose.position)},
            {"orientation", json::array({q.w(), q.x(), q.y(), q.z()})},
            {"jaw", to_string(pose.jaw)}};
}

Pose pose_from_json(const json& doc, const Pose& base) {
    if (!doc.is_object()) throw ProtocolError("pose must be an object");
    Pose p = base;
    if (doc.contains("position")) p.position = vec_from(doc.at("position"), "position");
    if (doc.contains("orientation")) {
        const json& q = doc.at("orientation");
        if (!q.is_array() || q.size() != 4) throw ProtocolError("orientation: expected [w, x, y, z]");
        for (const auto& c : q) {
            if (!c.is_number()) throw ProtocolError("orientation: expected numbers");
        }
        p.orientation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
        const double n = p.orientation.norm();
        if (!std::isfinite(n) || n < 1e-9) throw ProtocolError("orientation: zero or non-finite quaternion");
        // Already-unit input is kept bit for bit so logged poses replay exactly.
        if (std::abs(n - 1.0) > 1e-12) p.orientation.normalize();
    }
    if (doc.contains("jaw")) {
        if (!doc.at("jaw").is_string()) throw ProtocolError("jaw: expected \"open\" or \"closed\"");
        try {
            p.jaw = jaw_from_string(doc.at("jaw").get<std::string>());
        } catch (const std::exception&) {
            throw ProtocolError("jaw: expected \"open\" or \"closed\"");
        }
    }
    return p;
}

json master_to_json(const ArmPair<Pose>& master) {
    return {{"left", pose_to_json(master.left)}, {"right", pose_to_json(master.right)}};
}

ArmPair<Pose> master_from_json(const json& payload, const ArmPair<Pose>& held) {
    ArmPair<Pose> out = held;
    for (Arm arm : kArms) {
        const std::string key(to_string(arm));
        if (payload.contains(key)) out[arm] = pose_from_json(payload.at(key), held[arm]);
    }
    for (const auto& [key, _] : payload.items()) {
        if (key != "left" && key != "right") throw ProtocolError("master_input: unknown key \"" + key + "\"");
    }
    return out;
}

json world_to_json(const WorldState& world) {
    json pegs = json::array();
    for (const auto& p : world.pegs) {
        pegs.push_back({{"center", vec(p.center)},
                        {"radius", p.radius},
                        {"height", p.height},
                        {"state", to_string(p.state)},
                        {"displacement", p.displacement}});
    }
    json rings = json::array();
    for (const auto& r : world.active_rings()) {
        rings.push_back({{"id", to_string(r.id)},
                         {"state", to_string(r.state)},
                         {"center", vec(r.center)},
                         {"inner_radius", r.inner_radius},
                         {"stretch", r.stretch}});
    }
    return {{"tick", world.tick},
            {"ground_z", world.ground_z},
            {"grippers", master_to_json(world.grippers)},
            {"pegs", pegs},
            {"rings", rings}};
}

ConfigureRequest configure_from_json(const json& payload) {
    ConfigureRequest r;
    for (const auto& [key, value] : payload.items()) {
        if (key != "scenario" && key != "scaling" && key != "round_trip_delay_s" && key != "timeout_s" &&
            key != "seed") {
            throw ProtocolError("configure: unknown key \"" + key + "\"");
        }
    }
    if (payload.contains("scenario")) {
        if (!payload.at("scenario").is_string()) throw ProtocolError("configure.scenario: expected a string");
        r.scenario = payload.at("scenario").get<std::string>();
    }
    if (payload.contains("scaling")) {
        try {
            r.scaling = strategy_from_json(payload.at("scaling"));
            validate(*r.scaling);
        } catch (const std::exception& e) {
            throw ProtocolError(std::string("configure.scaling: ") + e.what());
        }
    }
    r.round_trip_delay_s = number(payload, "round_trip_delay_s");
    r.timeout_s = number(payload, "timeout_s");
    if (payload.contains("seed")) {
        const json& seed = payload.at("seed");
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
            throw ProtocolError("configure.seed: expected a non-negative integer");
        }
        r.seed = payload.at("seed").get<std::uint64_t>();
    }
    return r;
}

json configure_to_json(const ConfigureRequest& request) {
    json out = json::object();
    if (request.scenario) out["scenario"] = *request.scenario;
    if (request.scaling) out["scaling"] = strategy_to_json(*request.scaling);
    if (request.round_trip_delay_s) out["round_trip_delay_s"] = *request.round_trip_delay_s;
    if (request.timeout_s) out["timeout_s"] = *request.timeout_s;
    if (request.seed) out["seed"] = *request.seed;
    return out;
}

}  // namespace telescale
