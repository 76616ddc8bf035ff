#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace telescale {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

enum class Jaw : std::uint8_t { Open, Closed };

enum class Arm : std::uint8_t { Left = 0, Right = 1 };

inline constexpr std::array<Arm, 2> kArms{Arm::Left, Arm::Right};

constexpr std::size_t index(Arm arm) { return static_cast<std::size_t>(arm); }
constexpr Arm other(Arm arm) { return arm == Arm::Left ? Arm::Right : Arm::Left; }

std::string_view to_string(Arm arm);
std::string_view to_string(Jaw jaw);
Arm arm_from_string(std::string_view name);
Jaw jaw_from_string(std::string_view name);

/// Tool-tip pose of one arm: position in meters, unit orientation, jaw state.
struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    Jaw jaw = Jaw::Open;

    static Pose at(const Vec3& position, Jaw jaw = Jaw::Open);

    /// Finite position and |q| = 1 within 1e-9.
    bool valid() const;

    friend bool operator==(const Pose& a, const Pose& b) {
        return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs() &&
               a.jaw == b.jaw;
    }
};

/// One value per arm, indexable by Arm.
template <typename T>
struct ArmPair {
    T left{};
    T right{};

    T& operator[](Arm arm) { return arm == Arm::Left ? left : right; }
    const T& operator[](Arm arm) const { return arm == Arm::Left ? left : right; }

    friend bool operator==(const ArmPair&, const ArmPair&) = default;
};

}  // namespace telescale
