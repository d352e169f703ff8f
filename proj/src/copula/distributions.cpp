#include "lossres/copula/distributions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "lossres/error.hpp"
#include "lossres/quadrature.hpp"

namespace lossres::copula {

namespace bm = boost::math;

namespace {

const bm::normal_distribution<double> kStdNormal(0.0, 1.0);

double normal_quantile(Uniform u) {
  return u.u <= 0.5 ? bm::quantile(kStdNormal, u.u) : -bm::quantile(kStdNormal, u.uc);
}

double t_quantile(double nu, Uniform u) {
  const bm::students_t_distribution<double> t(nu);
  return u.u <= 0.5 ? bm::quantile(t, u.u) : -bm::quantile(t, u.uc);
}

double normal_log_pdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi); }

double t_log_pdf(double nu, double x) {
  return std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) - 0.5 * std::log(nu * std::numbers::pi) -
         (nu + 1.0) / 2.0 * std::log1p(x * x / nu);
}

void require_open_unit(double u, const char* what) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError(std::string(what) + ": probability must lie in (0, 1)");
}

void require_marginal(double shape, double y, const char* what) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError(std::string(what) + ": shape must be positive");
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError(std::string(what) + ": y must be positive");
}

double frank_log_density(double theta, double u1, double u2) {
  if (std::abs(theta) < kFrankIndependenceGuard) return 0.0;
  const double a = -std::expm1(-theta);
  const double e1 = -std::expm1(-theta * u1);
  const double e2 = -std::expm1(-theta * u2);
  const double d = a - e1 * e2;
  return std::log(std::abs(theta)) + std::log(std::abs(a)) - theta * (u1 + u2) - 2.0 * std::log(std::abs(d));
}

double student_t_log_density(double r, double nu, Uniform u1, Uniform u2) {
  const double a = t_quantile(nu, u1);
  const double b = t_quantile(nu, u2);
  const double one_r2 = 1.0 - r * r;
  const double q = (a * a + b * b - 2.0 * r * a * b) / (nu * one_r2);
  return std::lgamma((nu + 2.0) / 2.0) + std::lgamma(nu / 2.0) - 2.0 * std::lgamma((nu + 1.0) / 2.0) -
         0.5 * std::log(one_r2) - (nu + 2.0) / 2.0 * std::log1p(q) +
         (nu + 1.0) / 2.0 * (std::log1p(a * a / nu) + std::log1p(b * b / nu));
}

}  // namespace

std::string_view to_string(MarginalFamily family) {
  return family == MarginalFamily::kLognormal ? "lognormal" : "gamma";
}

std::string_view to_string(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::kProduct: return "product";
    case CopulaFamily::kGaussian: return "gaussian";
    case CopulaFamily::kFrank: return "frank";
    case CopulaFamily::kStudentT: return "student_t";
  }
  return "unknown";
}

MarginalFamily parse_marginal_family(std::string_view text) {
  if (text == "lognormal") return MarginalFamily::kLognormal;
  if (text == "gamma") return MarginalFamily::kGamma;
  throw DomainError("unknown marginal family '" + std::string(text) + "'");
}

CopulaFamily parse_copula_family(std::string_view text) {
  if (text == "product" || text == "independence") return CopulaFamily::kProduct;
  if (text == "gaussian" || text == "normal") return CopulaFamily::kGaussian;
  if (text == "frank") return CopulaFamily::kFrank;
  if (text == "student_t" || text == "t") return CopulaFamily::kStudentT;
  throw DomainError("unknown copula family '" + std::string(text) + "'");
}

double marginal_log_density(MarginalFamily family, double eta, double shape, double y) {
  require_marginal(shape, y, "marginal_log_density");
  if (family == MarginalFamily::kLognormal) {
    const double z = (std::log(y) - eta) / shape;
    return normal_log_pdf(z) - std::log(shape) - std::log(y);
  }
  const double x = y * shape * std::exp(-eta);
  return shape * std::log(x) - x - std::lgamma(shape) - std::log(y);
}

double marginal_density(MarginalFamily family, double eta, double shape, double y) {
  return std::exp(marginal_log_density(family, eta, shape, y));
}

Uniform marginal_uniform(MarginalFamily family, double eta, double shape, double y) {
  require_marginal(shape, y, "marginal_cdf");
  if (family == MarginalFamily::kLognormal) {
    const double z = (std::log(y) - eta) / shape;
    return {bm::cdf(kStdNormal, z), bm::cdf(bm::complement(kStdNormal, z))};
  }
  const double x = y * shape * std::exp(-eta);
  return {bm::gamma_p(shape, x), bm::gamma_q(shape, x)};
}

double marginal_cdf(MarginalFamily family, double eta, double shape, double y) {
  return marginal_uniform(family, eta, shape, y).u;
}

double marginal_quantile(MarginalFamily family, double eta, double shape, double u) {
  require_open_unit(u, "marginal_quantile");
  if (!(shape > 0.0)) throw DomainError("marginal_quantile: shape must be positive");
  if (family == MarginalFamily::kLognormal) return std::exp(eta + shape * bm::quantile(kStdNormal, u));
  return bm::gamma_p_inv(shape, u) * std::exp(eta) / shape;
}

double marginal_quantile_complement(MarginalFamily family, double eta, double shape, double uc) {
  require_open_unit(uc, "marginal_quantile_complement");
  if (!(shape > 0.0)) throw DomainError("marginal_quantile_complement: shape must be positive");
  if (family == MarginalFamily::kLognormal)
    return std::exp(eta + shape * bm::quantile(bm::complement(kStdNormal, uc)));
  return bm::gamma_q_inv(shape, uc) * std::exp(eta) / shape;
}

double marginal_mean(MarginalFamily family, double eta, double shape) {
  if (!(shape > 0.0)) throw DomainError("marginal_mean: shape must be positive");
  return family == MarginalFamily::kLognormal ? std::exp(eta + 0.5 * shape * shape) : std::exp(eta);
}

void CopulaSpec::validate() const {
  switch (family) {
    case CopulaFamily::kProduct: return;
    case CopulaFamily::kGaussian:
      if (!(theta > -1.0 && theta < 1.0)) throw DomainError("gaussian copula: theta must lie in (-1, 1)");
      return;
    case CopulaFamily::kFrank:
      if (!std::isfinite(theta)) throw DomainError("frank copula: theta must be finite");
      return;
    case CopulaFamily::kStudentT:
      if (!(theta > -1.0 && theta < 1.0)) throw DomainError("student t copula: theta must lie in (-1, 1)");
      if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("student t copula: nu must be positive");
      return;
  }
}

int CopulaSpec::parameter_count() const {
  switch (family) {
    case CopulaFamily::kProduct: return 0;
    case CopulaFamily::kGaussian:
    case CopulaFamily::kFrank: return 1;
    case CopulaFamily::kStudentT: return 2;
  }
  return 0;
}

double copula_log_density(const CopulaSpec& spec, Uniform u1, Uniform u2) {
  switch (spec.family) {
    case CopulaFamily::kProduct: return 0.0;
    case CopulaFamily::kGaussian: {
      const double a = normal_quantile(u1);
      const double b = normal_quantile(u2);
      const double r = spec.theta;
      const double one_r2 = 1.0 - r * r;
      return -0.5 * std::log(one_r2) - (r * r * (a * a + b * b) - 2.0 * r * a * b) / (2.0 * one_r2);
    }
    case CopulaFamily::kFrank: return frank_log_density(spec.theta, u1.u, u2.u);
    case CopulaFamily::kStudentT: return student_t_log_density(spec.theta, spec.nu, u1, u2);
  }
  return 0.0;
}

double copula_log_density(const CopulaSpec& spec, double u1, double u2) {
  require_open_unit(u1, "copula_density");
  require_open_unit(u2, "copula_density");
  spec.validate();
  return copula_log_density(spec, Uniform{u1, 1.0 - u1}, Uniform{u2, 1.0 - u2});
}

double copula_density(const CopulaSpec& spec, double u1, double u2) {
  return std::exp(copula_log_density(spec, u1, u2));
}

CopulaLogDensityGrad copula_log_density_grad(const CopulaSpec& spec, Uniform u1, Uniform u2) {
  CopulaLogDensityGrad g;
  switch (spec.family) {
    case CopulaFamily::kProduct: return g;
    case CopulaFamily::kGaussian: {
      const double a = normal_quantile(u1);
      const double b = normal_quantile(u2);
      const double r = spec.theta;
      const double one_r2 = 1.0 - r * r;
      const double s = a * a + b * b;
      const double p = a * b;
      g.value = -0.5 * std::log(one_r2) - (r * r * s - 2.0 * r * p) / (2.0 * one_r2);
      const double d_a = -(r * r * a - r * b) / one_r2;
      const double d_b = -(r * r * b - r * a) / one_r2;
      g.d_u1 = d_a * std::exp(-normal_log_pdf(a));
      g.d_u2 = d_b * std::exp(-normal_log_pdf(b));
      g.d_theta = r / one_r2 - (r * s - p * (1.0 + r * r)) / (one_r2 * one_r2);
      return g;
    }
    case CopulaFamily::kFrank: {
      const double th = spec.theta;
      if (std::abs(th) < kFrankIndependenceGuard) {
        g.d_theta = 0.5 * (1.0 - 2.0 * u1.u) * (1.0 - 2.0 * u2.u);
        return g;
      }
      const double a = -std::expm1(-th);
      const double x1 = std::exp(-th * u1.u);
      const double x2 = std::exp(-th * u2.u);
      const double e1 = 1.0 - x1;
      const double e2 = 1.0 - x2;
      const double d = a - e1 * e2;
      g.value = frank_log_density(th, u1.u, u2.u);
      g.d_u1 = -th + 2.0 * e2 * th * x1 / d;
      g.d_u2 = -th + 2.0 * e1 * th * x2 / d;
      g.d_theta = 1.0 / th + std::exp(-th) / a - (u1.u + u2.u) -
                  2.0 / d * (std::exp(-th) - (u1.u * x1 * e2 + e1 * u2.u * x2));
      return g;
    }
    case CopulaFamily::kStudentT: {
      const double r = spec.theta;
      const double nu = spec.nu;
      const double a = t_quantile(nu, u1);
      const double b = t_quantile(nu, u2);
      const double one_r2 = 1.0 - r * r;
      const double n = a * a + b * b - 2.0 * r * a * b;
      const double q = n / (nu * one_r2);
      g.value = student_t_log_density(r, nu, u1, u2);
      const double w = (nu + 2.0) / 2.0 / (1.0 + q);
      const double d_a = -w * (2.0 * a - 2.0 * r * b) / (nu * one_r2) + (nu + 1.0) / nu * a / (1.0 + a * a / nu);
      const double d_b = -w * (2.0 * b - 2.0 * r * a) / (nu * one_r2) + (nu + 1.0) / nu * b / (1.0 + b * b / nu);
      g.d_u1 = d_a * std::exp(-t_log_pdf(nu, a));
      g.d_u2 = d_b * std::exp(-t_log_pdf(nu, b));
      g.d_theta = r / one_r2 - w * (-2.0 * a * b * one_r2 + 2.0 * r * n) / (nu * one_r2 * one_r2);
      // The quantiles depend on nu too; a central difference covers both paths.
      const double h = 1e-3 * std::min(1.0, nu - 1.0);
      const auto f = [&](double v) { return student_t_log_density(r, v, u1, u2); };
      g.d_nu = (f(nu - 2 * h) - 8.0 * f(nu - h) + 8.0 * f(nu + h) - f(nu + 2 * h)) / (12.0 * h);
      return g;
    }
  }
  return g;
}

std::pair<double, double> copula_sample(const CopulaSpec& spec, Rng& rng) {
  switch (spec.family) {
    case CopulaFamily::kProduct: {
      const double u1 = open_uniform(rng);
      return {u1, open_uniform(rng)};
    }
    case CopulaFamily::kGaussian: {
      std::normal_distribution<double> normal;
      const double z1 = normal(rng);
      const double z2 = spec.theta * z1 + std::sqrt(1.0 - spec.theta * spec.theta) * normal(rng);
      return {bm::cdf(kStdNormal, z1), bm::cdf(kStdNormal, z2)};
    }
    case CopulaFamily::kFrank: {
      const double u1 = open_uniform(rng);
      const double w = open_uniform(rng);
      if (std::abs(spec.theta) < kFrankIndependenceGuard) return {u1, w};
      const double th = spec.theta;
      const double x1 = std::exp(-th * u1);
      const double t = w * std::expm1(-th) / (x1 - w * (x1 - 1.0));
      return {u1, -std::log1p(t) / th};
    }
    case CopulaFamily::kStudentT: {
      std::normal_distribution<double> normal;
      std::chi_squared_distribution<double> chi2(spec.nu);
      const double z1 = normal(rng);
      const double z2 = spec.theta * z1 + std::sqrt(1.0 - spec.theta * spec.theta) * normal(rng);
      const double scale = std::sqrt(spec.nu / chi2(rng));
      const bm::students_t_distribution<double> t(spec.nu);
      return {bm::cdf(t, z1 * scale), bm::cdf(t, z2 * scale)};
    }
  }
  return {0.5, 0.5};
}

double copula_conditional_cdf(const CopulaSpec& spec, double u2, double u1) {
  require_open_unit(u1, "copula_conditional_cdf");
  require_open_unit(u2, "copula_conditional_cdf");
  switch (spec.family) {
    case CopulaFamily::kProduct: return u2;
    case CopulaFamily::kGaussian: {
      const double a = bm::quantile(kStdNormal, u1);
      const double b = bm::quantile(kStdNormal, u2);
      return bm::cdf(kStdNormal, (b - spec.theta * a) / std::sqrt(1.0 - spec.theta * spec.theta));
    }
    case CopulaFamily::kFrank: {
      const double th = spec.theta;
      if (std::abs(th) < kFrankIndependenceGuard) return u2;
      const double x1 = std::exp(-th * u1);
      const double t2 = std::expm1(-th * u2);
      return x1 * t2 / (std::expm1(-th) + (x1 - 1.0) * t2);
    }
    case CopulaFamily::kStudentT: {
      const double nu = spec.nu;
      const bm::students_t_distribution<double> t(nu);
      const bm::students_t_distribution<double> t1(nu + 1.0);
      const double a = bm::quantile(t, u1);
      const double b = bm::quantile(t, u2);
      const double scale = std::sqrt((nu + a * a) * (1.0 - spec.theta * spec.theta) / (nu + 1.0));
      return bm::cdf(t1, (b - spec.theta * a) / scale);
    }
  }
  return u2;
}

double debye1(double x) {
  if (x == 0.0) return 1.0;
  static const QuadratureRule unit = gauss_legendre(64, 0.0, 1.0);
  double sum = 0.0;
  for (std::size_t k = 0; k < unit.nodes.size(); ++k) {
    const double t = x * unit.nodes[k];
    sum += unit.weights[k] * t / std::expm1(t);
  }
  return sum;
}

double kendall_tau(const CopulaSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case CopulaFamily::kProduct: return 0.0;
    case CopulaFamily::kGaussian:
    case CopulaFamily::kStudentT: return 2.0 * std::asin(spec.theta) / std::numbers::pi;
    case CopulaFamily::kFrank:
      if (std::abs(spec.theta) < kFrankIndependenceGuard) return 0.0;
      return 1.0 - 4.0 / spec.theta * (1.0 - debye1(spec.theta));
  }
  return 0.0;
}

double kendall_tau_numeric(const CopulaSpec& spec, int nodes) {
  spec.validate();
  // Probit substitution u = Phi(s) concentrates nodes near the corners.
  const QuadratureRule rule = gauss_legendre(nodes, -8.0, 8.0);
  std::vector<double> u(rule.nodes.size()), w(rule.nodes.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k] = bm::cdf(kStdNormal, rule.nodes[k]);
    w[k] = rule.weights[k] * bm::pdf(kStdNormal, rule.nodes[k]);
  }
  double integral = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p)
    for (std::size_t q = 0; q < u.size(); ++q)
      integral += w[p] * w[q] * copula_conditional_cdf(spec, u[q], u[p]) * copula_conditional_cdf(spec, u[p], u[q]);
  return 1.0 - 4.0 * integral;
}

}  // namespace lossres::copula
