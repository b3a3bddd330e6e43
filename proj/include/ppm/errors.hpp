#pragma once

#include <stdexcept>

namespace ppm {

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A retraction hit a beamformer entry too close to zero to normalize.
class DegenerateRetraction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ppm
