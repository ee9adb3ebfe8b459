#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowsentinel {

enum class ErrorKind {
    ShapeMismatch,
    MissingCache,
    EmptySequence,
    InvalidRate,
    InvalidLabel,
    IndexOutOfRange,
    NonFiniteValue,
    NonFiniteGradient,
    FileNotFound,
    MissingColumn,
    EmptyInput,
    UnknownLabel,
    ClassTooSmall,
    KTooLarge,
    InvalidSpec,
    InvalidConfig,
    IoError,
    CorruptModel,
    CorruptCache,
    ModeMismatch,
    NonFiniteLoss,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the toolkit; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace flowsentinel
