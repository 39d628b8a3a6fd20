#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ics {

// Error taxonomy shared across modules. Everything derives from std::runtime_error
// so callers can catch broadly at the harness boundary and narrowly in tests.

struct UnknownNode : std::runtime_error {
  explicit UnknownNode(const std::string& what) : std::runtime_error(what) {}
};

struct StepOutOfRange : std::runtime_error {
  explicit StepOutOfRange(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyTrajectory : std::runtime_error {
  EmptyTrajectory() : std::runtime_error("trajectory has no thoughts") {}
};

/// Corrupt serialized input. `offset` is the byte position of the record that
/// failed to parse.
struct MalformedInput : std::runtime_error {
  MalformedInput(const std::string& what, std::size_t offset_)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset_) + ")"),
        offset(offset_) {}
  std::size_t offset;
};

/// Scripted policy had no rule matching a prompt. Always a test bug; fail loudly.
struct ScriptMiss : std::runtime_error {
  explicit ScriptMiss(const std::string& what) : std::runtime_error(what) {}
};

struct EndpointUnavailable : std::runtime_error {
  explicit EndpointUnavailable(const std::string& what) : std::runtime_error(what) {}
};

struct VoteCountMismatch : std::runtime_error {
  VoteCountMismatch(std::size_t expected_, std::size_t got_)
      : std::runtime_error("gate expected " + std::to_string(expected_) +
                           " votes, got " + std::to_string(got_)),
        expected(expected_),
        got(got_) {}
  std::size_t expected;
  std::size_t got;
};

struct ZeroTrials : std::runtime_error {
  ZeroTrials() : std::runtime_error("confidence interval over zero trials") {}
};

/// Dataset line failed validation. `line` is 1-based.
struct SchemaError : std::runtime_error {
  SchemaError(const std::string& what, std::size_t line_)
      : std::runtime_error(what + " (line " + std::to_string(line_) + ")"), line(line_) {}
  std::size_t line;
};

}  // namespace ics
