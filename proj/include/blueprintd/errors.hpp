#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blueprintd {

/// Base class for all library errors. Each subclass names one failure the
/// callers are expected to distinguish.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

#define BLUEPRINTD_ERROR(Name)                                                 \
  class Name : public Error {                                                  \
  public:                                                                      \
    using Error::Error;                                                        \
  }

BLUEPRINTD_ERROR(ConfigError);
BLUEPRINTD_ERROR(UnknownTable);
BLUEPRINTD_ERROR(MissingHistogram);
BLUEPRINTD_ERROR(NoCalibration);
BLUEPRINTD_ERROR(DegenerateDesign);
BLUEPRINTD_ERROR(NonPositiveInput);
BLUEPRINTD_ERROR(UtilizationOutOfRange);
BLUEPRINTD_ERROR(Saturated);
BLUEPRINTD_ERROR(UnknownPrice);
BLUEPRINTD_ERROR(EmptyEligibleSet);
BLUEPRINTD_ERROR(NoFeasibleBlueprint);
BLUEPRINTD_ERROR(SearchSpaceTooLarge);
BLUEPRINTD_ERROR(EmptyWorkload);
BLUEPRINTD_ERROR(TransitionInFlight);
BLUEPRINTD_ERROR(EmptySamples);

#undef BLUEPRINTD_ERROR

} // namespace blueprintd
