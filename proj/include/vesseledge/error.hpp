#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vesseledge {

enum class ErrorKind {
    InvalidArgument,
    ParseError,
    ChecksumError,
    UnsupportedType,
    IncompleteMultipart,
    FormatError,
    EmptyModel,
    StateError,
    ConfigError,
    CorruptPacket,
    TruncatedPacket,
    VersionError,
    IoError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind() when the
// distinction matters (e.g. checksum failures are counted apart from parse errors).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace vesseledge
