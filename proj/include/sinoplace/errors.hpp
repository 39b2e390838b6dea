#pragma once

#include <stdexcept>
#include <string>

namespace sinoplace {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses name the failure class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SINOPLACE_ERROR(Name)                  \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what_arg) \
        : Error(#Name ": " + what_arg) {}      \
  }

SINOPLACE_ERROR(IoError);
SINOPLACE_ERROR(FormatError);
SINOPLACE_ERROR(InvalidBounds);
SINOPLACE_ERROR(InvalidArgument);
SINOPLACE_ERROR(ShapeMismatch);
SINOPLACE_ERROR(TapeMismatch);
SINOPLACE_ERROR(BadConfig);
SINOPLACE_ERROR(ZeroDescriptor);
SINOPLACE_ERROR(NotNormalized);
SINOPLACE_ERROR(InsufficientClasses);
SINOPLACE_ERROR(EmptyInput);
SINOPLACE_ERROR(CorruptFile);

#undef SINOPLACE_ERROR

}  // namespace sinoplace
