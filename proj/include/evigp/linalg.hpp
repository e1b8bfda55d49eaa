#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace evigp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a numerical step cannot be completed at working precision
/// (e.g. a covariance factorization that fails even after jitter escalation,
/// or an objective that evaluates to a non-finite value).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evigp
