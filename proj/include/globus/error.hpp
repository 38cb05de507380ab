#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace globus {

/// Failure categories shared by every module. The CLI maps these onto exit
/// codes and the machine-parsable error line.
enum class ErrorKind {
    Alignment,
    Void,
    EmptyStatistics,
    Shape,
    Format,
    Geometry,
    Coverage,
    Input,
    Divergence,
    Packing,
    EmptyCloud,
    Empty,
    Config,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed file content. Carries the byte offset at which parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& message, std::uint64_t offset)
        : Error(ErrorKind::Format, message + " (at byte " + std::to_string(offset) + ")"),
          detail_(message),
          offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string detail_;
    std::uint64_t offset_;
};

}  // namespace globus
