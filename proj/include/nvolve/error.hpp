#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvolve {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two pieces of data disagree on a length or a dimension.
class ShapeError : public Error {
public:
    ShapeError(const std::string& what, std::size_t expected, std::size_t actual)
        : Error(what + ": expected " + std::to_string(expected) + ", got " + std::to_string(actual)),
          expected_(expected), actual_(actual) {}

    explicit ShapeError(const std::string& what) : Error(what) {}

    [[nodiscard]] std::size_t expected() const noexcept { return expected_; }
    [[nodiscard]] std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_ = 0;
    std::size_t actual_ = 0;
};

/// A precondition on an argument value was violated (bad config, empty input, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// NaN or Inf showed up where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Text input (objective DSL, atlas, key-value file) failed to parse.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}

    /// Byte offset into the parsed text (or line number for line-oriented formats).
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// A region name is not present in the atlas.
class UnknownRegion : public Error {
public:
    explicit UnknownRegion(const std::string& name)
        : Error("unknown region '" + name + "'"), name_(name) {}

    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

enum class FormatErrorKind {
    io,
    bad_magic,
    unsupported_version,
    unsupported_dtype,
    truncated,
    trailing_bytes,
    missing_entry,
    dim_mismatch,
    dangling_reference,
    non_monotone,
    malformed,
};

inline const char* to_string(FormatErrorKind k) noexcept {
    switch (k) {
        case FormatErrorKind::io: return "io";
        case FormatErrorKind::bad_magic: return "bad_magic";
        case FormatErrorKind::unsupported_version: return "unsupported_version";
        case FormatErrorKind::unsupported_dtype: return "unsupported_dtype";
        case FormatErrorKind::truncated: return "truncated";
        case FormatErrorKind::trailing_bytes: return "trailing_bytes";
        case FormatErrorKind::missing_entry: return "missing_entry";
        case FormatErrorKind::dim_mismatch: return "dim_mismatch";
        case FormatErrorKind::dangling_reference: return "dangling_reference";
        case FormatErrorKind::non_monotone: return "non_monotone";
        case FormatErrorKind::malformed: return "malformed";
    }
    return "unknown";
}

/// Any failure reading or writing one of the on-disk formats.
class FormatError : public Error {
public:
    FormatError(FormatErrorKind kind, const std::string& msg)
        : Error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

    [[nodiscard]] FormatErrorKind kind() const noexcept { return kind_; }

private:
    FormatErrorKind kind_;
};

}  // namespace nvolve
