#include <cmath>
#include <limits>

#include "cbjj/optimize.hpp"

namespace cbjj {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

Eigen::VectorXd project(const Eigen::VectorXd& x, const LmOptions& o) {
  Eigen::VectorXd y = x;
  if (o.lower.size() == x.size()) {
    y = y.cwiseMax(o.lower);
  }
  if (o.upper.size() == x.size()) {
    y = y.cwiseMin(o.upper);
  }
  return y;
}

}  // namespace

Eigen::MatrixXd numeric_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x) {
  Eigen::MatrixXd jac;
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    const Eigen::VectorXd fp = f(xp);
    xp[j] = x[j] - h;
    const Eigen::VectorXd fm = f(xp);
    xp[j] = x[j];
    if (jac.size() == 0) {
      jac.resize(fp.size(), x.size());
    }
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

LmResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0, const LmOptions& options) {
  LmResult res;
  res.x = project(x0, options);
  res.residuals = f(res.x);
  if (!all_finite(res.residuals)) {
    res.message = "residuals not finite at the initial guess";
    return res;
  }
  res.cost = 0.5 * res.residuals.squaredNorm();
  double lambda = options.initial_lambda;

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    res.jacobian = numeric_jacobian(f, res.x);
    const Eigen::VectorXd g = res.jacobian.transpose() * res.residuals;
    const Eigen::MatrixXd a = res.jacobian.transpose() * res.jacobian;
    if (g.lpNorm<Eigen::Infinity>() <= options.abs_tol * 1e-3) {
      res.converged = true;
      res.message = "gradient below tolerance";
      return res;
    }
    Eigen::VectorXd scale = a.diagonal().cwiseMax(1e-12 * std::max(1.0, a.diagonal().maxCoeff()));

    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * scale;
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      const Eigen::VectorXd x_new = project(res.x + step, options);
      const Eigen::VectorXd r_new = f(x_new);
      const double cost_new = all_finite(r_new) ? 0.5 * r_new.squaredNorm() : std::numeric_limits<double>::infinity();
      if (cost_new < res.cost) {
        const double drop = res.cost - cost_new;
        const double dx = (x_new - res.x).norm();
        res.x = x_new;
        res.residuals = r_new;
        res.cost = cost_new;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (drop <= options.abs_tol + options.rel_tol * cost_new ||
            dx <= options.rel_tol * (res.x.norm() + options.rel_tol)) {
          res.jacobian = numeric_jacobian(f, res.x);
          res.converged = true;
          res.message = "cost change below tolerance";
          ++res.iterations;
          return res;
        }
        break;
      }
      const double dx = (x_new - res.x).norm();
      if (dx <= options.rel_tol * (res.x.norm() + options.rel_tol)) {
        // No representable improvement left.
        res.converged = true;
        res.message = "step below tolerance";
        return res;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      res.converged = true;
      res.message = "no further decrease possible";
      return res;
    }
  }
  res.message = "iteration limit reached";
  return res;
}

Eigen::MatrixXd gauss_newton_covariance(const Eigen::MatrixXd& jacobian) {
  const Eigen::MatrixXd a = jacobian.transpose() * jacobian;
  return a.completeOrthogonalDecomposition().pseudoInverse();
}

}  // namespace cbjj
