#pragma once

#include <stdexcept>
#include <string>

namespace mtfr {

/// Raised when a numerical procedure cannot produce a trustworthy answer
/// (failed factorization, non-convergence, singular system).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The R-th singular value of a fixed-rank iterate collapsed.
class RankDegeneracy : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

inline void check_dims(bool cond, const std::string& what) {
  if (!cond) throw DimensionMismatch(what);
}

}  // namespace mtfr
