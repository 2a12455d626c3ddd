#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowmine {

// Usage / configuration problems (CLI exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data (CLI exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : DataError {
  using DataError::DataError;
};

struct PreconditionError : DataError {
  using DataError::DataError;
};

struct FlowError : DataError {
  FlowError(std::string flow, const std::string &what)
      : DataError("flow '" + flow + "': " + what), flow_name(std::move(flow)) {}
  std::string flow_name;
};

struct ParseError : DataError {
  ParseError(std::size_t line, const std::string &what)
      : DataError("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

struct TrainingError : DataError {
  using DataError::DataError;
};

// Internal invariant violated (CLI exit code 3).
struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

} // namespace flowmine
