#include "povcast/error.hpp"

namespace povcast {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Empty: return "empty";
    case ErrorKind::Index: return "index";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

ParseError::ParseError(std::size_t row, std::size_t col, const std::string& what)
    : Error(ErrorKind::Parse,
            "row " + std::to_string(row) + ", column " + std::to_string(col) + ": " + what),
      row_(row), col_(col) {}

} // namespace povcast
