#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hmcurv {

enum class ErrorCode {
    UnsupportedDimension,
    ResolutionTooSmall,
    NonPositiveRadius,
    RadiusOutOfRange,
    DegenerateMetric,
    NotAdmissible,
    OutOfRange,
    ScaleOutOfRange,
    DomainError,
    GridMismatch,
    NotAtBoundary,
    NotAtMaximum,
    ParseError,
    ConfigError,
    PsiConditionsFailed,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::ResolutionTooSmall: return "ResolutionTooSmall";
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::RadiusOutOfRange: return "RadiusOutOfRange";
    case ErrorCode::DegenerateMetric: return "DegenerateMetric";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ScaleOutOfRange: return "ScaleOutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NotAtBoundary: return "NotAtBoundary";
    case ErrorCode::NotAtMaximum: return "NotAtMaximum";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::PsiConditionsFailed: return "PsiConditionsFailed";
    }
    return "Unknown";
}

/// Base exception for every library failure; carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when an operation that requires Gamma_m membership meets nodes outside it.
class NotAdmissibleError : public Error {
public:
    NotAdmissibleError(const std::string& what, std::vector<std::size_t> nodes)
        : Error(ErrorCode::NotAdmissible, what), nodes_(std::move(nodes))
    {
    }

    const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }

private:
    std::vector<std::size_t> nodes_;
};

} // namespace hmcurv
