#pragma once

#include <stdexcept>

namespace dtml {

// Malformed arguments: shape mismatches, out-of-domain parameters.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unusable input data: unreadable files, parse failures, label mismatches.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical routine could not complete (SVD non-convergence, failed
// factorization). Never returned as silent garbage.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dtml
