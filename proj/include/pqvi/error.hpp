#pragma once

#include <stdexcept>
#include <string>

namespace pqvi {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    VariantMismatch,
    Infeasible,
    NonConvergence,
    Config,
};

/// Single exception type for the library; `kind()` lets callers map failures
/// onto exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::DimensionMismatch: return "dimension mismatch";
        case ErrorKind::VariantMismatch: return "variant mismatch";
        case ErrorKind::Infeasible: return "infeasible";
        case ErrorKind::NonConvergence: return "non-convergence";
        case ErrorKind::Config: return "config";
    }
    return "unknown";
}

}  // namespace pqvi
