#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsvhmc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input or configuration detected before any computation starts.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A model term evaluated to a non-finite value.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::size_t index)
        : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

    /// Zero-based position of the offending term.
    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Failure while reading or writing files.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace rsvhmc
