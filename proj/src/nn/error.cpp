#include "flowsentinel/error.hpp"

namespace flowsentinel {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::MissingCache: return "MissingCache";
        case ErrorKind::EmptySequence: return "EmptySequence";
        case ErrorKind::InvalidRate: return "InvalidRate";
        case ErrorKind::InvalidLabel: return "InvalidLabel";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::NonFiniteValue: return "NonFiniteValue";
        case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorKind::FileNotFound: return "FileNotFound";
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::UnknownLabel: return "UnknownLabel";
        case ErrorKind::ClassTooSmall: return "ClassTooSmall";
        case ErrorKind::KTooLarge: return "KTooLarge";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::CorruptModel: return "CorruptModel";
        case ErrorKind::CorruptCache: return "CorruptCache";
        case ErrorKind::ModeMismatch: return "ModeMismatch";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    }
    return "Unknown";
}

}  // namespace flowsentinel
