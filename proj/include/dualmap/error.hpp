#pragma once

#include <stdexcept>
#include <string>

namespace dualmap {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data: bad files, invariant violations, unknown classes.
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace dualmap
