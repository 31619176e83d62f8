#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace swphm {

/// Failure categories shared by the library, the CLI and the HTTP service.
enum class ErrorCode {
    usage,           // bad flags or request shape
    validation,      // input data violates the data model
    io,              // file could not be read or written
    not_trained,     // operation needs a fitted model
    out_of_range,    // outside a calibrated or numeric range
    cap_exceeded,    // enumeration too large for exhaustive search
    degenerate,      // statistically ill-posed input (zero variance etc.)
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::usage: return "E_USAGE";
    case ErrorCode::validation: return "E_VALIDATION";
    case ErrorCode::io: return "E_IO";
    case ErrorCode::not_trained: return "E_NOT_TRAINED";
    case ErrorCode::out_of_range: return "E_OUT_OF_RANGE";
    case ErrorCode::cap_exceeded: return "E_CAP_EXCEEDED";
    case ErrorCode::degenerate: return "E_DEGENERATE";
    }
    return "E_UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace swphm
