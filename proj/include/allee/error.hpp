#pragma once

#include <stdexcept>
#include <string>

namespace allee {

/// Bad input: parameters, schedules, files or configuration that violate a
/// precondition. The CLI maps this to exit status 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A well-formed computation that could not be completed (tolerance not
/// reached, step size too large, I/O failure). The CLI maps this to exit 2.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void fail_validation(const std::string& what) { throw ValidationError(what); }
[[noreturn]] inline void fail_runtime(const std::string& what) { throw RuntimeFailure(what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail_validation(what);
}

} // namespace detail
} // namespace allee
