#pragma once

#include <stdexcept>
#include <string>

namespace telescale {

/// Invalid configuration values (clock, scaling parameters, geometry).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Peg layout whose plane normal equations cannot be solved.
class DegenerateLayoutError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario file that cannot be read or does not match the schema.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-order wire message.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Session log written by an incompatible protocol version.
class IncompatibleLogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File system failure; the message always carries the offending path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace telescale
