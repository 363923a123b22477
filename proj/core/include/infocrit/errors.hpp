// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_ERRORS_HPP
#define INFOCRIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace infocrit {

// Caller violated a precondition (bad dimensions, empty input, missing field).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input was structurally fine but numerically unusable (NaN, non-SPD matrix).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem / parse failures for datasets, draws, and reports.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace infocrit

#endif
