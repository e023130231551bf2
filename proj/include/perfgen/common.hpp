#pragma once

#include <stdexcept>
#include <string>

namespace perfgen {

/// Raised for bad user input: malformed files, violated preconditions,
/// out-of-range parameters. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a file on disk is structurally broken (truncated checkpoint,
/// bad magic, version mismatch).
class CorruptFileError : public ValidationError {
public:
    explicit CorruptFileError(const std::string& msg) : ValidationError(msg) {}
};

} // namespace perfgen
