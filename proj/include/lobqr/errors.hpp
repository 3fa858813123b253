#pragma once

#include <stdexcept>
#include <string>

namespace lobqr {

// Root of every error thrown by the library. The CLI maps these to exit code 2
// (usage / data problems); anything else escaping is a runtime failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LOBQR_ERROR(Name)                              \
    class Name : public Error {                        \
    public:                                            \
        explicit Name(const std::string& what)         \
            : Error(std::string(#Name ": ") + what) {} \
    }

// book
LOBQR_ERROR(InvalidLevel);
LOBQR_ERROR(InvalidSize);
LOBQR_ERROR(EmptySide);

// event logs and configs
LOBQR_ERROR(SchemaError);
LOBQR_ERROR(ValueError);
LOBQR_ERROR(OrderError);
LOBQR_ERROR(ConfigError);
LOBQR_ERROR(ZeroTotalIntensity);

// features
LOBQR_ERROR(OutOfSession);

// neural engine and models
LOBQR_ERROR(ShapeMismatch);
LOBQR_ERROR(VersionMismatch);
LOBQR_ERROR(FormatError);

// metrics
LOBQR_ERROR(NonPositiveSample);
LOBQR_ERROR(NonPositiveValue);
LOBQR_ERROR(InsufficientHistory);

#undef LOBQR_ERROR

}  // namespace lobqr
