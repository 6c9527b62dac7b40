#ifndef ARSPIKE_COMMON_HPP
#define ARSPIKE_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace arspike {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index  = Eigen::Index;

/// Base class for all domain errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// k spikes with the requested separation cannot fit in n slots.
struct SeparationError : Error { using Error::Error; };

/// A model that must be stable (all poles inside the unit circle) is not.
struct InstabilityError : Error { using Error::Error; };

/// Operand shapes do not line up.
struct DimensionError : Error { using Error::Error; };

/// Too few measurements to assemble the requested regressor system.
struct InsufficientMeasurementsError : Error { using Error::Error; };

/// A matrix that must have full column rank does not.
struct RankDeficientError : Error { using Error::Error; };

/// A linear system that must be invertible is numerically singular.
struct SingularSystemError : Error { using Error::Error; };

/// Y'Y too ill-conditioned for the projected decoding path.
struct IllConditionedError : Error { using Error::Error; };

/// Exact open-boundary decoding requested without the 2p boundary samples.
struct MissingBoundaryError : Error { using Error::Error; };

/// Problem exceeds the combinatorial guard of the brute-force oracle.
struct SizeLimitError : Error { using Error::Error; };

/// Requested residual ball is below the least-squares floor.
struct InfeasibleEpsilonError : Error {
  InfeasibleEpsilonError(const std::string& what, double floor_value)
      : Error(what), floor(floor_value) {}
  double floor;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

}  // namespace arspike

#endif  // ARSPIKE_COMMON_HPP
