#pragma once

#include <Eigen/Dense>
#include <functional>

#include "lossres/grad/parameter_store.hpp"
#include "lossres/rng.hpp"

namespace lossres::grad {

struct AmsGradConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One AMSGRAD update with bias-corrected moments; the denominator uses the running
/// elementwise maximum of the second moment. Throws NumericError (store untouched)
/// if any gradient entry is non-finite, DomainError on a shape mismatch.
void amsgrad_step(ParameterStore& store, const GradientMap& grads, const AmsGradConfig& config);

/// Objective returning f(x) and writing grad f(x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int steps = 0;
  bool converged = false;
};

/// Plain AMSGRAD descent on a vector objective; stops when ||grad|| < tolerance.
MinimizeResult minimize_amsgrad(const Objective& f, Eigen::VectorXd x0, const AmsGradConfig& config, int max_steps,
                                double tolerance);

/// He initialization: i.i.d. Normal(0, 2 / fan_in).
Matrix he_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);

}  // namespace lossres::grad
