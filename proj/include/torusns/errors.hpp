#pragma once

#include <stdexcept>
#include <string>

namespace torusns {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define TORUSNS_DEFINE_ERROR(Name)                                  \
    struct Name : Error {                                           \
        explicit Name(const std::string& msg) : Error(msg) {}       \
    }

TORUSNS_DEFINE_ERROR(BandOutOfRange);
TORUSNS_DEFINE_ERROR(DegenerateInput);
TORUSNS_DEFINE_ERROR(InvalidWeight);
TORUSNS_DEFINE_ERROR(InvalidDensity);
TORUSNS_DEFINE_ERROR(MeanConstraintViolated);
TORUSNS_DEFINE_ERROR(CflViolation);
TORUSNS_DEFINE_ERROR(DensityOutOfBounds);
TORUSNS_DEFINE_ERROR(InconsistentPair);
TORUSNS_DEFINE_ERROR(InsufficientSnapshots);
TORUSNS_DEFINE_ERROR(InvalidExponents);
TORUSNS_DEFINE_ERROR(MomentumNotZero);
TORUSNS_DEFINE_ERROR(NoContraction);
TORUSNS_DEFINE_ERROR(MismatchedTimes);
TORUSNS_DEFINE_ERROR(MismatchedRuns);
TORUSNS_DEFINE_ERROR(MissingAtomRuns);
TORUSNS_DEFINE_ERROR(MissingDiagnostics);
TORUSNS_DEFINE_ERROR(ConfigError);

#undef TORUSNS_DEFINE_ERROR

}  // namespace torusns
