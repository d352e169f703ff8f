#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace lossres {

/// Returns f(x) and writes grad f(x). A non-finite value marks x as infeasible.
using VectorObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
  double gradient_tolerance = 1e-6;
  int max_iterations = 5000;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Quasi-Newton minimization with an inverse-Hessian BFGS update and a weak
/// Wolfe bracketing line search. The best point seen is always returned.
BfgsResult minimize_bfgs(const VectorObjective& f, Eigen::VectorXd x0, const BfgsOptions& options = {});

/// Newton refinement of a near-optimal point using numerical_hessian; a step is
/// kept when it lowers the gradient norm without raising f beyond rounding noise.
BfgsResult polish_newton(const VectorObjective& f, BfgsResult start, const BfgsOptions& options = {},
                         int max_steps = 10);

/// Symmetrized central-difference Jacobian of the gradient.
Eigen::MatrixXd numerical_hessian(const VectorObjective& f, const Eigen::VectorXd& x, double step = 1e-5);

}  // namespace lossres
