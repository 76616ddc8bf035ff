#include "telescale/pose.hpp"

#include <cmath>
#include <string>

#include "telescale/error.hpp"

namespace telescale {

std::string_view to_string(Arm arm) { return arm == Arm::Left ? "left" : "right"; }

std::string_view to_string(Jaw jaw) { return jaw == Jaw::Open ? "open" : "closed"; }

Arm arm_from_string(std::string_view name) {
    if (name == "left") return Arm::Left;
    if (name == "right") return Arm::Right;
    throw ConfigError("unknown arm '" + std::string(name) + "'");
}

Jaw jaw_from_string(std::string_view name) {
    if (name == "open") return Jaw::Open;
    if (name == "closed") return Jaw::Closed;
    throw ConfigError("unknown jaw state '" + std::string(name) + "'");
}

Pose Pose::at(const Vec3& position, Jaw jaw) {
    Pose pose;
    pose.position = position;
    pose.jaw = jaw;
    return pose;
}

bool Pose::valid() const {
    return position.allFinite() && std::abs(orientation.norm() - 1.0) <= 1e-9;
}

}  // namespace telescale
