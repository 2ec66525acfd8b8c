#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dastank {

// Bad argument to a library call (non-positive period, cutoff out of range, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration value violates an invariant. `field()` is the dotted path
// of the offending key, e.g. "wave.height_m".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed record file. `offset()` is the byte offset (binary) or line
// number (text) where parsing stopped; -1 when not applicable.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::int64_t offset = -1)
      : std::runtime_error(offset >= 0 ? what + " (at offset " + std::to_string(offset) + ")" : what),
        offset_(offset) {}
  std::int64_t offset() const noexcept { return offset_; }

 private:
  std::int64_t offset_;
};

// Base for failures of an estimator on otherwise valid input.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoPeakError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class WeakPeakError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class UndefinedCorrelationError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class DegenerateFitError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class DegenerateCurveError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class InconsistentLayoutsError : public EstimationError {
 public:
  InconsistentLayoutsError(const std::string& what, double lambda_app_c1_m, double lambda_app_c2_m)
      : EstimationError(what), lambda_app_c1_m(lambda_app_c1_m), lambda_app_c2_m(lambda_app_c2_m) {}
  double lambda_app_c1_m;
  double lambda_app_c2_m;
};

}  // namespace dastank
