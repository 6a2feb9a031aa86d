#pragma once

#include <stdexcept>
#include <string>

namespace nrc {

// Malformed or missing input files (IDX, model files, CSV, config).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or sizes that do not agree with the network or graph they are used with.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Divergent training, LP non-convergence and similar numerical failures.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nrc
