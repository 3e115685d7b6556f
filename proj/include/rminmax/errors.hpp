#pragma once

#include <stdexcept>
#include <string>

namespace rminmax {

// Floating-point breakdown: non-finite values, loss of positive definiteness,
// divergence past the configured cap.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The geodesic between two points is not unique (sphere antipodes).
class GeodesicNotUnique : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace rminmax
