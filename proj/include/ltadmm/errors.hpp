#pragma once

#include <stdexcept>
#include <string>

namespace ltadmm {

//! Invalid graph construction: disconnected, self-loop, duplicate edge, bad node id.
class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Out-of-range or inconsistent algorithm parameter.
class ParameterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Violation of the round protocol: missing or duplicate neighbor message, bad init.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Non-finite numeric input or a failed numeric routine.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Malformed or invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Reference solver failed to reach the requested tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! A reference oracle was asked to run a configuration it does not support.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ltadmm
