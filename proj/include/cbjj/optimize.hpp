#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace cbjj {

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_iterations = 500;
  double initial_lambda = 1e-3;
  /// Optional box constraints (empty = unbounded); steps are projected.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct LmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;  // 0.5 |r|^2
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Central-difference Jacobian of f at x.
Eigen::MatrixXd numeric_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x);

/// Minimizes 0.5 |f(x)|^2 by Levenberg-Marquardt with Marquardt diagonal
/// scaling and numerically differentiated Jacobians.
LmResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0, const LmOptions& options = {});

/// (J^T J)^-1 via a pseudo-inverse so rank-deficient problems still return a matrix.
Eigen::MatrixXd gauss_newton_covariance(const Eigen::MatrixXd& jacobian);

}  // namespace cbjj
