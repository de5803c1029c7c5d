#pragma once

#include <stdexcept>
#include <string>

namespace bsup {

/// Root of every exception thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BSUP_DEFINE_ERROR(Name)            \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

BSUP_DEFINE_ERROR(ShapeError);
BSUP_DEFINE_ERROR(NumericError);
BSUP_DEFINE_ERROR(UsageError);
BSUP_DEFINE_ERROR(GraphError);
BSUP_DEFINE_ERROR(ConfigError);
BSUP_DEFINE_ERROR(FormatError);
BSUP_DEFINE_ERROR(RangeError);
BSUP_DEFINE_ERROR(NormalizationError);
BSUP_DEFINE_ERROR(DegenerateError);
BSUP_DEFINE_ERROR(IoError);

#undef BSUP_DEFINE_ERROR

}  // namespace bsup
