#pragma once

#include <stdexcept>
#include <string>

namespace vstab {

// Argument outside an operation's precondition (dimension mismatch, bad range).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input file. line() is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a semantic rule. path() names the offending field.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// A matcher could not produce a translation (empty reference or no overlap energy).
class NoMatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Reference capture failed, e.g. no stimulus visible at fixation onset.
class CaptureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vstab
