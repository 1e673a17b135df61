#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qci {

/// Failure categories shared by all modules.
enum class ErrorCode {
    OutOfChart,
    Unsupported,
    PreconditionViolation,
    SolverDivergence,
    NoBracket,
    EmptyShell,
    PoleSingularity,
    NotRegularLevel,
    NegativeIntegrand,
    QuadratureStall,
    AllowedRegion,
    InsufficientSamples,
    EmptyRegion,
    EmptySpectrum,
    DegenerateFit,
    UnderflowRegion,
    UnderResolved,
    Floor,
    LinearSolveFailure,
    ConfigError,
};

inline std::string_view to_string(ErrorCode c) {
    switch (c) {
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::SolverDivergence: return "SolverDivergence";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::EmptyShell: return "EmptyShell";
    case ErrorCode::PoleSingularity: return "PoleSingularity";
    case ErrorCode::NotRegularLevel: return "NotRegularLevel";
    case ErrorCode::NegativeIntegrand: return "NegativeIntegrand";
    case ErrorCode::QuadratureStall: return "QuadratureStall";
    case ErrorCode::AllowedRegion: return "AllowedRegion";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::UnderflowRegion: return "UnderflowRegion";
    case ErrorCode::UnderResolved: return "UnderResolved";
    case ErrorCode::Floor: return "Floor";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
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

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorCode::PreconditionViolation, what);
}

} // namespace qci
