#include "lossres/grad/amsgrad.hpp"

#include <cmath>

#include "lossres/error.hpp"

namespace lossres::grad {

void amsgrad_step(ParameterStore& store, const GradientMap& grads, const AmsGradConfig& config) {
  for (const auto& [name, g] : grads) {
    const auto& value = store.value(name);
    if (g.rows() != value.rows() || g.cols() != value.cols())
      throw DomainError("amsgrad_step: gradient shape mismatch for '" + name + "'");
    if (!g.allFinite()) throw NumericError("amsgrad_step: non-finite gradient for '" + name + "'");
  }
  const auto t = static_cast<double>(store.advance_step());
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  const double step = config.learning_rate * std::sqrt(bias2) / bias1;

  for (const auto& [name, g] : grads) {
    auto& s = store.mutable_slot(name);
    s.first_moment = config.beta1 * s.first_moment + (1.0 - config.beta1) * g;
    s.second_moment = config.beta2 * s.second_moment + (1.0 - config.beta2) * g.cwiseAbs2();
    s.max_second_moment = s.max_second_moment.cwiseMax(s.second_moment);
    s.value.array() -= step * s.first_moment.array() / (s.max_second_moment.array().sqrt() + config.epsilon);
  }
}

MinimizeResult minimize_amsgrad(const Objective& f, Eigen::VectorXd x0, const AmsGradConfig& config, int max_steps,
                                double tolerance) {
  ParameterStore store;
  store.add("x", std::move(x0));
  MinimizeResult out;
  Eigen::VectorXd grad(store.value("x").rows());
  for (int k = 0; k < max_steps; ++k) {
    const Eigen::VectorXd x = store.value("x");
    out.value = f(x, grad);
    out.grad_norm = grad.norm();
    out.steps = k;
    if (!std::isfinite(out.value)) throw NumericError("minimize_amsgrad: non-finite objective");
    if (out.grad_norm < tolerance) {
      out.converged = true;
      break;
    }
    amsgrad_step(store, GradientMap{{"x", Matrix(grad)}}, config);
    out.steps = k + 1;
  }
  out.x = store.value("x");
  if (!out.converged) {
    out.value = f(out.x, grad);
    out.grad_norm = grad.norm();
    out.converged = out.grad_norm < tolerance;
  }
  return out;
}

Matrix he_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  if (fan_in < 1) throw DomainError("he_init: fan_in must be >= 1");
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
  return out;
}

}  // namespace lossres::grad
