#pragma once

#include <stdexcept>
#include <string>

namespace lognorm {

// Error taxonomy.  Codes 2..5 double as process exit codes for the CLI;
// everything else exits 1.
enum class ErrorCode {
    Generic = 1,
    InvalidConfig = 2,
    UnsupportedField = 3,
    PrecisionExhausted = 4,
    Anomaly = 5,
    NotInvertible,
    NotDecomposable,
    NotUnit,
    NotSplit,
    NotSemisimple,
    NotASublattice,
    NonPrincipalizable,
    BoundExceeded,
    HeightOverflow,
    ConductorOverflow,
    FactorizationIncomplete,
    CacheCorrupt,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }
    // exit code the CLI should use when this error escapes
    int exit_code() const {
        switch (code_) {
        case ErrorCode::InvalidConfig: return 2;
        case ErrorCode::UnsupportedField: return 3;
        case ErrorCode::PrecisionExhausted: return 4;
        case ErrorCode::Anomaly: return 5;
        default: return 1;
        }
    }

private:
    ErrorCode code_;
};

#define LOGNORM_DEFINE_ERROR(NAME)                                       \
    class NAME : public Error {                                          \
    public:                                                              \
        explicit NAME(const std::string& what)                           \
            : Error(ErrorCode::NAME, what) {}                            \
    }

LOGNORM_DEFINE_ERROR(InvalidConfig);
LOGNORM_DEFINE_ERROR(UnsupportedField);
LOGNORM_DEFINE_ERROR(PrecisionExhausted);
LOGNORM_DEFINE_ERROR(Anomaly);
LOGNORM_DEFINE_ERROR(NotInvertible);
LOGNORM_DEFINE_ERROR(NotDecomposable);
LOGNORM_DEFINE_ERROR(NotUnit);
LOGNORM_DEFINE_ERROR(NotSplit);
LOGNORM_DEFINE_ERROR(NotSemisimple);
LOGNORM_DEFINE_ERROR(NotASublattice);
LOGNORM_DEFINE_ERROR(NonPrincipalizable);
LOGNORM_DEFINE_ERROR(BoundExceeded);
LOGNORM_DEFINE_ERROR(HeightOverflow);
LOGNORM_DEFINE_ERROR(ConductorOverflow);
LOGNORM_DEFINE_ERROR(FactorizationIncomplete);
LOGNORM_DEFINE_ERROR(CacheCorrupt);

#undef LOGNORM_DEFINE_ERROR

} // namespace lognorm
