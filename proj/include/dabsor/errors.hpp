#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dabsor {

/// Failure categories raised across the library. Each maps to one exception
/// type below so callers can either catch `Error` and switch on `code()`, or
/// catch the concrete type.
enum class ErrorCode {
    DimensionMismatch,
    NonFiniteEntry,
    NotSPD,
    NoConvergence,
    SingularSystem,
    GridTooSmall,
    UnsupportedOrder,
    InvalidArgument,
    SingularSymbol,
    StabilityViolation,
    MaxItersExceeded,
    ZeroReference,
    EmptyHistory,
    UnknownTable,
    ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
        case ErrorCode::NotSPD: return "NotSPD";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::GridTooSmall: return "GridTooSmall";
        case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::SingularSymbol: return "SingularSymbol";
        case ErrorCode::StabilityViolation: return "StabilityViolation";
        case ErrorCode::MaxItersExceeded: return "MaxItersExceeded";
        case ErrorCode::ZeroReference: return "ZeroReference";
        case ErrorCode::EmptyHistory: return "EmptyHistory";
        case ErrorCode::UnknownTable: return "UnknownTable";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

#define DABSOR_DEFINE_ERROR(Name)                                                  \
    class Name : public Error {                                                    \
    public:                                                                        \
        explicit Name(const std::string& what) : Error(ErrorCode::Name, what) {}   \
    };

DABSOR_DEFINE_ERROR(DimensionMismatch)
DABSOR_DEFINE_ERROR(NonFiniteEntry)
DABSOR_DEFINE_ERROR(NotSPD)
DABSOR_DEFINE_ERROR(NoConvergence)
DABSOR_DEFINE_ERROR(SingularSystem)
DABSOR_DEFINE_ERROR(GridTooSmall)
DABSOR_DEFINE_ERROR(UnsupportedOrder)
DABSOR_DEFINE_ERROR(InvalidArgument)
DABSOR_DEFINE_ERROR(SingularSymbol)
DABSOR_DEFINE_ERROR(StabilityViolation)
DABSOR_DEFINE_ERROR(ZeroReference)
DABSOR_DEFINE_ERROR(EmptyHistory)
DABSOR_DEFINE_ERROR(UnknownTable)
DABSOR_DEFINE_ERROR(ConfigError)

#undef DABSOR_DEFINE_ERROR

}  // namespace dabsor
