#pragma once

#include <stdexcept>
#include <string>

namespace natcsnn {

// Base for every error raised by the library. The CLI maps the subclasses
// onto its exit codes (usage 1, data/format 2, numeric 3).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or configuration values.
class UsageError : public Error {
  public:
    using Error::Error;
};

// Malformed files, dataset problems, fingerprint or phase mismatches.
class FormatError : public Error {
  public:
    using Error::Error;
};

// Non-finite state, unreachable calibration targets.
class NumericError : public Error {
  public:
    using Error::Error;
};

} // namespace natcsnn
