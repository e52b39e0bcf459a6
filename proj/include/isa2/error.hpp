#pragma once

#include <stdexcept>
#include <string>

namespace isa2 {

// Error hierarchy. The CLI maps each family onto an exit code:
// ConfigError -> 2, IoError / DataError -> 3, NumericalError -> 4.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or missing configuration, or a missing prerequisite artifact.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures: unreadable, unwritable, truncated.
class IoError : public Error {
public:
    using Error::Error;
};

/// Well-formed bytes that violate a data invariant (bad CSV row, class id out of range, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Solver failures: singular systems, divergence.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace isa2
