#pragma once

#include <stdexcept>
#include <string>

namespace satconv {

// Shape or channel-count mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition was violated by the caller (e.g. an unprojected
// box, an even kernel size).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed serialized input: FeatureMap binaries, box checkpoints, configs.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace satconv
