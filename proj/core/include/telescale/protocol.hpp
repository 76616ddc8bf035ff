#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "telescale/harness.hpp"
#include "telescale/peg_task.hpp"
#include "telescale/pose.hpp"

namespace telescale {

inline constexpr std::string_view kProtocolVersion = "telescale/1";

enum class MessageType : std::uint8_t {
    Hello,
    HelloAck,
    Configure,
    Start,
    Reset,
    MasterInput,
    Frame,
    Event,
    TrialDone,
    Error,
};

std::string_view to_string(MessageType type);
/// Throws ProtocolError for unknown names.
MessageType message_type_from_string(std::string_view name);

/// One protocol message. On the wire it is a single JSON text carried in one
/// WebSocket text frame: {"type": ..., "seq": ..., "payload": {...}}.
struct WireMessage {
    MessageType type = MessageType::Hello;
    std::uint64_t seq = 0;
    nlohmann::json payload = nlohmann::json::object();
};

std::string encode(const WireMessage& message);

/// Throws ProtocolError on invalid JSON, unknown type, bad seq or a
/// non-object payload.
WireMessage decode(std::string_view text);

nlohmann::json pose_to_json(const Pose& pose);
/// Fields missing from `doc` keep their value in `base`.
Pose pose_from_json(const nlohmann::json& doc, const Pose& base);

/// master_input payload: {"left": pose, "right": pose}; either arm may be
/// omitted to keep its held value. Positions in meters, orientation [w, x, y, z].
nlohmann::json master_to_json(const ArmPair<Pose>& master);
ArmPair<Pose> master_from_json(const nlohmann::json& payload, const ArmPair<Pose>& held);

/// Delayed world snapshot as sent in frames.
nlohmann::json world_to_json(const WorldState& world);

/// configure payload. Every field is optional.
struct ConfigureRequest {
    std::optional<std::string> scenario;
    std::optional<ScalingStrategy> scaling;
    std::optional<double> round_trip_delay_s;
    std::optional<double> timeout_s;
    std::optional<std::uint64_t> seed;
};

ConfigureRequest configure_from_json(const nlohmann::json& payload);
nlohmann::json configure_to_json(const ConfigureRequest& request);

}  // namespace telescale
