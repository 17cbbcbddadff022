#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace backcast {

// Input text that could not be understood. Carries the 1-based line number
// of the offending line so tools can point at it.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// An argument or value outside the domain an operation is defined on
// (zero-length sequences, k out of range, non-positive amounts, ...).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A key that should resolve but does not: unknown fragment timestamp,
// unknown repository name, unknown job label.
class LookupError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two artifacts that are supposed to describe the same run disagree,
// e.g. a simulation log that does not cover the enactment plan.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A VM request that no machine in the cloud could ever satisfy.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The background fragment ran out of jobs before the warm-up count
// was reached, so the workflow never got submitted.
class WarmupError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace backcast
