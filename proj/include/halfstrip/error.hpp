#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace halfstrip {

enum class ErrorKind {
    InvalidArgument,
    InvalidModel,
    InvalidState,
    InvalidCoefficients,
    Schema,
    Reducible,
    NonCentered,
    WrongSign,
    WrongRegime,
    DegenerateVariance,
    TooFewSamples,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::InvalidState: return "InvalidState";
        case ErrorKind::InvalidCoefficients: return "InvalidCoefficients";
        case ErrorKind::Schema: return "Schema";
        case ErrorKind::Reducible: return "Reducible";
        case ErrorKind::NonCentered: return "NonCentered";
        case ErrorKind::WrongSign: return "WrongSign";
        case ErrorKind::WrongRegime: return "WrongRegime";
        case ErrorKind::DegenerateVariance: return "DegenerateVariance";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
    }
    return "Unknown";
}

/// Single exception type for the library; `kind()` lets callers branch on the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace halfstrip
