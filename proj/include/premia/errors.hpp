#pragma once

#include <stdexcept>
#include <string>

namespace premia {

enum class ErrorKind {
    io,
    parse,
    alignment,
    singular,
    identification,
    dimension,
    contract,
    bandwidth,
    insufficient_data,
    degenerate_variance,
    parameter,
    config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base class for every error raised by the library. The kind drives the
/// CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when a linear system is numerically rank deficient. Carries the
/// reciprocal condition estimate of the offending normal matrix.
class SingularError : public Error {
public:
    SingularError(const std::string& what, double rcond)
        : Error(ErrorKind::singular, what + " (reciprocal condition " + std::to_string(rcond) + ")"),
          rcond_(rcond) {}

    double rcond() const noexcept { return rcond_; }

private:
    double rcond_;
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::io: return "io";
        case ErrorKind::parse: return "parse";
        case ErrorKind::alignment: return "alignment";
        case ErrorKind::singular: return "singular";
        case ErrorKind::identification: return "identification";
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::contract: return "contract";
        case ErrorKind::bandwidth: return "bandwidth";
        case ErrorKind::insufficient_data: return "insufficient_data";
        case ErrorKind::degenerate_variance: return "degenerate_variance";
        case ErrorKind::parameter: return "parameter";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

}  // namespace premia
