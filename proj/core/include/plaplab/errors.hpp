#pragma once

#include <stdexcept>
#include <string>

namespace plaplab {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input violates a documented precondition (bad value, bad range, bad shape).
struct DomainError : Error {
    using Error::Error;
};

/// A numerical procedure could not produce a trustworthy answer
/// (divergent integral, oscillating fit, broken monotone ordering, ...).
struct NumericsError : Error {
    using Error::Error;
};

/// Configuration file problems, with location information when available.
struct ConfigError : Error {
    ConfigError(const std::string& what, int line_number = 0, std::string field_path = "")
        : Error(format(what, line_number, field_path)), line(line_number), field(std::move(field_path)) {}

    int line = 0;
    std::string field;

private:
    static std::string format(const std::string& what, int line, const std::string& field) {
        std::string msg;
        if (!field.empty()) msg += field + ": ";
        msg += what;
        if (line > 0) msg += " (line " + std::to_string(line) + ")";
        return msg;
    }
};

} // namespace plaplab
