#include "lossres/optim.hpp"

#include <cmath>
#include <limits>

namespace lossres {

namespace {

struct LineSearchResult {
  bool ok = false;
  double t = 0.0;
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
};

LineSearchResult wolfe_search(const VectorObjective& f, const Eigen::VectorXd& x, double fx, const Eigen::VectorXd& gx,
                              const Eigen::VectorXd& d, double t0, int& evaluations) {
  constexpr double kC1 = 1e-4;
  constexpr double kC2 = 0.9;
  const double slope = gx.dot(d);
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  double t = t0;
  LineSearchResult best;
  Eigen::VectorXd g(x.size());
  for (int iter = 0; iter < 60; ++iter) {
    const Eigen::VectorXd trial = x + t * d;
    const double ft = f(trial, g);
    ++evaluations;
    const bool finite = std::isfinite(ft) && g.allFinite();
    if (finite && ft < fx && (!best.ok || ft < best.value)) {
      best.ok = true;
      best.t = t;
      best.value = ft;
      best.x = trial;
      best.grad = g;
    }
    if (!finite || ft > fx + kC1 * t * slope) {
      hi = t;
    } else if (g.dot(d) < kC2 * slope) {
      lo = t;
    } else {
      LineSearchResult out{true, t, ft, trial, g};
      return out;
    }
    t = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
    if (hi - lo < 1e-16 * std::max(1.0, hi)) break;
  }
  // Accept the best decrease found even if the curvature condition failed.
  return best;
}

}  // namespace

BfgsResult minimize_bfgs(const VectorObjective& f, Eigen::VectorXd x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult out;
  Eigen::VectorXd g(n);
  out.x = std::move(x0);
  out.value = f(out.x, g);
  out.evaluations = 1;
  if (!std::isfinite(out.value) || !g.allFinite()) {
    out.message = "objective not finite at the starting point";
    return out;
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  int resets = 0;
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    out.gradient_norm = g.norm();
    if (out.gradient_norm < options.gradient_tolerance) {
      out.converged = true;
      out.message = "gradient norm below tolerance";
      return out;
    }
    Eigen::VectorXd d = -h * g;
    if (g.dot(d) >= 0.0) {
      h.setIdentity();
      fresh = true;
      d = -g;
    }
    const double t0 = fresh ? std::min(1.0, 1.0 / out.gradient_norm) : 1.0;
    const auto ls = wolfe_search(f, out.x, out.value, g, d, t0, out.evaluations);
    if (!ls.ok) {
      if (!fresh && resets < 5) {
        h.setIdentity();
        fresh = true;
        ++resets;
        continue;
      }
      out.message = "line search failed to decrease the objective";
      return out;
    }
    const Eigen::VectorXd s = ls.x - out.x;
    const Eigen::VectorXd y = ls.grad - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      h += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
      fresh = false;
    }
    out.x = ls.x;
    out.value = ls.value;
    g = ls.grad;
  }
  out.gradient_norm = g.norm();
  out.converged = out.gradient_norm < options.gradient_tolerance;
  out.message = out.converged ? "gradient norm below tolerance" : "iteration cap reached";
  return out;
}

Eigen::MatrixXd numerical_hessian(const VectorObjective& f, const Eigen::VectorXd& x, double step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd gp(n), gm(n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = step * std::max(1.0, std::abs(x(k)));
    xp(k) = x(k) + h;
    f(xp, gp);
    xp(k) = x(k) - h;
    f(xp, gm);
    xp(k) = x(k);
    hess.col(k) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

BfgsResult polish_newton(const VectorObjective& f, BfgsResult start, const BfgsOptions& options, int max_steps) {
  BfgsResult out = std::move(start);
  Eigen::VectorXd g(out.x.size());
  out.value = f(out.x, g);
  out.gradient_norm = g.norm();
  for (int step = 0; step < max_steps && out.gradient_norm >= options.gradient_tolerance; ++step) {
    const Eigen::MatrixXd hess = numerical_hessian(f, out.x);
    out.evaluations += 2 * static_cast<int>(out.x.size());
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd trial = out.x - ldlt.solve(g);
    Eigen::VectorXd gt(out.x.size());
    const double ft = f(trial, gt);
    ++out.evaluations;
    const double noise = 1e-12 * std::max(1.0, std::abs(out.value));
    if (!std::isfinite(ft) || !gt.allFinite() || ft > out.value + noise || gt.norm() >= out.gradient_norm) break;
    out.x = trial;
    out.value = ft;
    g = gt;
    out.gradient_norm = g.norm();
    ++out.iterations;
  }
  out.converged = out.gradient_norm < options.gradient_tolerance;
  if (out.converged) out.message = "gradient norm below tolerance";
  return out;
}

}  // namespace lossres
