#pragma once

#include <stdexcept>
#include <string>

namespace polarsplat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define POLARSPLAT_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

POLARSPLAT_DEFINE_ERROR(InvalidArgument);
POLARSPLAT_DEFINE_ERROR(OutOfRange);
POLARSPLAT_DEFINE_ERROR(PoleSingularity);
POLARSPLAT_DEFINE_ERROR(EmptyBeam);
POLARSPLAT_DEFINE_ERROR(ZeroFrequency);
POLARSPLAT_DEFINE_ERROR(DegenerateFit);
POLARSPLAT_DEFINE_ERROR(DimensionMismatch);
POLARSPLAT_DEFINE_ERROR(EmptyWindow);
POLARSPLAT_DEFINE_ERROR(EmptySet);
POLARSPLAT_DEFINE_ERROR(DegenerateGroundTruth);
POLARSPLAT_DEFINE_ERROR(BadBeamIndex);
POLARSPLAT_DEFINE_ERROR(NonFiniteLoss);
POLARSPLAT_DEFINE_ERROR(IoError);
POLARSPLAT_DEFINE_ERROR(ConfigError);

#undef POLARSPLAT_DEFINE_ERROR

using MismatchedDimensions = DimensionMismatch;

}  // namespace polarsplat
