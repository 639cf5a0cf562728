#pragma once

#include <stdexcept>
#include <string>

namespace dragsim {

// Bad numeric argument (time outside the pulse window, nonphysical level
// index, probabilities outside [0,1], ...).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& m) : std::runtime_error(m) {}
};

// Structurally invalid specification (zero drag detuning, empty mode list,
// coupling referencing a missing mode, ...).
struct InvalidSpecError : std::runtime_error {
  explicit InvalidSpecError(const std::string& m) : std::runtime_error(m) {}
};

// Hilbert-space or resource limits exceeded.
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& m) : std::runtime_error(m) {}
};

// Lookup of a label or index that does not exist.
struct LookupError : std::runtime_error {
  explicit LookupError(const std::string& m) : std::runtime_error(m) {}
};

// Inconsistent run configuration (carrier far from any transition, sampling
// step too coarse, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

// Numeric integrity violation detected mid-run (lost unitarity, degenerate
// projection, non-converging fit).
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& m) : std::runtime_error(m) {}
};

// Calibration failed to converge or landed outside its allowed window.
struct CalibrationError : std::runtime_error {
  explicit CalibrationError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace dragsim
