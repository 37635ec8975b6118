#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace popforge {

enum class ErrorCode {
    Validation,
    UnknownTemplate,
    MissingSlot,
    ExtraSlot,
    Transport,
    AuthFailure,
    Timeout,
    ParseFailure,
    UnknownQuestion,
    NoPendingQuestion,
    RoundLimitReached,
    UnknownSource,
    EmptyText,
    CardinalityViolation,
    WrongState,
    UnknownPop,
    UnknownSession,
    NoRounds,
    SchemaError,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Transport, AuthFailure, Timeout and ParseFailure all surface as a
    /// gateway failure to API clients.
    bool is_gateway_error() const noexcept {
        return code_ == ErrorCode::Transport || code_ == ErrorCode::AuthFailure ||
               code_ == ErrorCode::Timeout || code_ == ErrorCode::ParseFailure;
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) fail(ErrorCode::Validation, message);
}

}  // namespace popforge
