#pragma once

#include <stdexcept>
#include <string>

namespace inout {

/// Invalid numeric inputs to a schedule, bound, or sampler.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operation is not defined for this body kind.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A safety cap was hit; usually a mis-set schedule or a pathological body.
class DiagnosticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical tolerance could not be met (grid too small, iteration did not converge).
class ToleranceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration text or body specification.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace inout
