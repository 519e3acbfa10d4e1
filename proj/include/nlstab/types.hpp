#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace nlstab {

using real_t = double;
using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr int kSchemaVersion = 1;

// Base class for numerical failures surfaced to callers.  The CLI maps these
// to exit code 3; configuration problems (ConfigError) map to exit code 2.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NoSolution : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct SingularLinearization : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };
struct SymmetryViolation : Error { using Error::Error; };
struct EigensolverFailure : Error { using Error::Error; };
struct TrackingLost : Error { using Error::Error; };
struct InsufficientSmoothness : Error { using Error::Error; };
struct ResonantConfiguration : Error { using Error::Error; };
struct DecompositionFailed : Error { using Error::Error; };
struct DegenerateJacobian : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct WrongSide : Error { using Error::Error; };
struct NoExtrapolationPlateau : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct CFLViolation : Error { using Error::Error; };
struct NaNDetected : Error { using Error::Error; };

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nlstab
