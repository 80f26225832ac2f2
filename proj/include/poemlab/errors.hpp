#pragma once

#include <stdexcept>
#include <string>

namespace poemlab {

// Base class for every failure raised by the library. Callers that only need
// to distinguish configuration problems from runtime failures can catch
// ConfigError / RegimeViolation separately and treat the rest as runtime.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define POEMLAB_DEFINE_ERROR(Name)      \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

POEMLAB_DEFINE_ERROR(NotPositiveDefinite);
POEMLAB_DEFINE_ERROR(NotSymmetric);
POEMLAB_DEFINE_ERROR(DimensionMismatch);
POEMLAB_DEFINE_ERROR(EmptyPool);
POEMLAB_DEFINE_ERROR(NonFiniteGradient);
POEMLAB_DEFINE_ERROR(RejectionStall);
POEMLAB_DEFINE_ERROR(DegenerateMu);
POEMLAB_DEFINE_ERROR(BoundViolation);
POEMLAB_DEFINE_ERROR(LengthMismatch);
POEMLAB_DEFINE_ERROR(DimensionError);
POEMLAB_DEFINE_ERROR(FormatError);

#undef POEMLAB_DEFINE_ERROR

// Configuration problems carry the name of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Theorem hypotheses (large signal/noise ratio, epsilon <= 1) not met.
class RegimeViolation : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace poemlab
