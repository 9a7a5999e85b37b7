#pragma once

#include <stdexcept>
#include <string>

namespace linkaudit {

// Base for every error the library throws. Per-item failures that are part
// of the measurement (network errors, malformed records) are encoded in
// values and counters instead.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define LINKAUDIT_DEFINE_ERROR(Name)                                         \
  class Name : public Error {                                                \
  public:                                                                    \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}     \
  }

LINKAUDIT_DEFINE_ERROR(UnparsableUrl);
LINKAUDIT_DEFINE_ERROR(UnsupportedScheme);
LINKAUDIT_DEFINE_ERROR(DomainError);
LINKAUDIT_DEFINE_ERROR(DegenerateSample);
LINKAUDIT_DEFINE_ERROR(TooFewSamples);
LINKAUDIT_DEFINE_ERROR(NonPositiveSample);
LINKAUDIT_DEFINE_ERROR(NotBroken);
LINKAUDIT_DEFINE_ERROR(MissingColumn);
LINKAUDIT_DEFINE_ERROR(EmptyFile);
LINKAUDIT_DEFINE_ERROR(NotEnoughBroken);
LINKAUDIT_DEFINE_ERROR(IoError);
LINKAUDIT_DEFINE_ERROR(UnknownFormat);
LINKAUDIT_DEFINE_ERROR(MalformedRecord);
LINKAUDIT_DEFINE_ERROR(ConfigError);

#undef LINKAUDIT_DEFINE_ERROR

}  // namespace linkaudit
