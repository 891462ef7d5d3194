#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace povcast {

// Stable error classes. The numeric values are mirrored by povcast_status in
// the C header and must not be reordered.
enum class ErrorKind : int {
    Parse = 1,
    Shape = 2,
    Empty = 3,
    Index = 4,
    Domain = 5,
    Config = 6,
    Io = 7,
    Format = 8,
    Degenerate = 9,
    Internal = 10,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed CSV cell. Row and column are 1-based positions in the source text.
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t col, const std::string& what);
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

#define POVCAST_DEFINE_ERROR(Name, Kind)                                                      \
    class Name : public Error {                                                               \
    public:                                                                                   \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}              \
    };

POVCAST_DEFINE_ERROR(ShapeError, Shape)
POVCAST_DEFINE_ERROR(EmptyError, Empty)
POVCAST_DEFINE_ERROR(IndexError, Index)
POVCAST_DEFINE_ERROR(DomainError, Domain)
POVCAST_DEFINE_ERROR(ConfigError, Config)
POVCAST_DEFINE_ERROR(IoError, Io)
POVCAST_DEFINE_ERROR(FormatError, Format)
POVCAST_DEFINE_ERROR(DegenerateError, Degenerate)

#undef POVCAST_DEFINE_ERROR

} // namespace povcast
