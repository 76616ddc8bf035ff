#include "telescale/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "telescale/error.hpp"

namespace telescale {
namespace {

template <typename... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void validate(const ScalingStrategy& strategy) {
    std::visit(
        Overloaded{
            [](const ConstantScaling& c) {
                if (!positive_finite(c.scale_m) || c.scale_m > 10.0) {
                    throw ConfigError("constant scale_m must lie in (0, 10], got " +
                                      std::to_string(c.scale_m));
                }
            },
            [](const PositionalScaling& p) {
                if (!positive_finite(p.scale_m)) throw ConfigError("positional scale_m must be > 0");
                if (!positive_finite(p.k)) throw ConfigError("positional k must be > 0");
                if (!positive_finite(p.min_scale) || !std::isfinite(p.max_scale) ||
                    p.min_scale > p.max_scale) {
                    throw ConfigError("positional scaling needs 0 < min_scale <= max_scale");
                }
            },
            [](const VelocityScaling& v) {
                if (!positive_finite(v.v1)) throw ConfigError("velocity v1 must be > 0");
                if (!std::isfinite(v.v2) || v.v2 < 0.0) throw ConfigError("velocity v2 must be >= 0");
                if (v.ceiling && (!std::isfinite(*v.ceiling) || *v.ceiling < v.v1)) {
                    throw ConfigError("velocity ceiling must be finite and >= v1");
                }
            },
        },
        strategy);
}

std::string_view strategy_kind(const ScalingStrategy& strategy) {
    return std::visit(Overloaded{
                          [](const ConstantScaling&) { return std::string_view("constant"); },
                          [](const PositionalScaling&) { return std::string_view("positional"); },
                          [](const VelocityScaling&) { return std::string_view("velocity"); },
                      },
                      strategy);
}

double positional_scale(double r, const PositionalScaling& cfg) {
    return std::min(cfg.max_scale, std::max(cfg.min_scale, cfg.k * r));
}

Pose apply_positional(const Pose& target_delayed_now, const Pose& target_delayed_prev,
                      const Pose& slave_prev, double scale_s) {
    Pose slave = target_delayed_now;
    slave.position =
        scale_s * (target_delayed_now.position - target_delayed_prev.position) + slave_prev.position;
    return slave;
}

void MasterHistory::push(const Vec3& position) {
    for (std::size_t i = kLength - 1; i > 0; --i) {
        samples_[i] = samples_[i - 1];
    }
    samples_[0] = position;
    size_ = std::min(size_ + 1, kLength);
}

Vec3 filtered_velocity(std::span<const Vec3, 4> m, double rate_hz) {
    return (m[0] + m[1] - m[2] - m[3]) / (4.0 / rate_hz);
}

Vec3 filtered_velocity(const MasterHistory& history, double rate_hz) {
    if (!history.warm()) {
        return Vec3::Zero();
    }
    return filtered_velocity(history.newest_first(), rate_hz);
}

double velocity_scale(const MasterHistory& history, const VelocityScaling& cfg, double rate_hz) {
    const double scale = cfg.v1 + cfg.v2 * filtered_velocity(history, rate_hz).norm();
    return cfg.ceiling ? std::min(scale, *cfg.ceiling) : scale;
}

double master_scale(const ScalingStrategy& strategy, const MasterHistory& history, double rate_hz) {
    return std::visit(
        Overloaded{
            [](const ConstantScaling& c) { return c.scale_m; },
            [](const PositionalScaling& p) { return p.scale_m; },
            [&](const VelocityScaling& v) { return velocity_scale(history, v, rate_hz); },
        },
        strategy);
}

double nominal_gain(const ScalingStrategy& strategy, double hand_speed) {
    return std::visit(Overloaded{
                          [](const ConstantScaling& c) { return c.scale_m; },
                          [](const PositionalScaling& p) { return p.scale_m; },
                          [&](const VelocityScaling& v) {
                              const double g = v.v1 + v.v2 * std::abs(hand_speed);
                              return v.ceiling ? std::min(g, *v.ceiling) : g;
                          },
                      },
                      strategy);
}

}  // namespace telescale
