#pragma once

#include <string_view>
#include <utility>

#include "lossres/rng.hpp"

namespace lossres::copula {

enum class MarginalFamily { kLognormal, kGamma };
enum class CopulaFamily { kProduct, kGaussian, kFrank, kStudentT };

std::string_view to_string(MarginalFamily family);
std::string_view to_string(CopulaFamily family);
MarginalFamily parse_marginal_family(std::string_view text);
CopulaFamily parse_copula_family(std::string_view text);

/// A probability together with its complement, each computed directly so that
/// values close to 1 keep full relative precision in the upper tail.
struct Uniform {
  double u;
  double uc;
};

// Marginals on the linear predictor scale. Lognormal: log y ~ Normal(eta, shape).
// Gamma: shape phi = shape, scale e^eta / phi, so the mean is e^eta.
double marginal_log_density(MarginalFamily family, double eta, double shape, double y);
double marginal_density(MarginalFamily family, double eta, double shape, double y);
double marginal_cdf(MarginalFamily family, double eta, double shape, double y);
Uniform marginal_uniform(MarginalFamily family, double eta, double shape, double y);
double marginal_quantile(MarginalFamily family, double eta, double shape, double u);
/// Quantile taking the complement 1 - u, accurate for u near 1.
double marginal_quantile_complement(MarginalFamily family, double eta, double shape, double uc);
double marginal_mean(MarginalFamily family, double eta, double shape);

struct CopulaSpec {
  CopulaFamily family = CopulaFamily::kProduct;
  double theta = 0.0;
  double nu = 0.0;  ///< degrees of freedom, Student t only

  /// Throws DomainError when the parameters lie outside the family's domain.
  void validate() const;
  int parameter_count() const;
};

/// |theta| below this is treated as the independence limit for Frank.
inline constexpr double kFrankIndependenceGuard = 1e-6;
/// Lower bound on the Student t degrees of freedom.
inline constexpr double kMinDegreesOfFreedom = 2.05;

double copula_log_density(const CopulaSpec& spec, Uniform u1, Uniform u2);
double copula_log_density(const CopulaSpec& spec, double u1, double u2);
double copula_density(const CopulaSpec& spec, double u1, double u2);

/// Partial derivatives of the copula log density.
struct CopulaLogDensityGrad {
  double value = 0.0;
  double d_u1 = 0.0;
  double d_u2 = 0.0;
  double d_theta = 0.0;
  double d_nu = 0.0;
};
CopulaLogDensityGrad copula_log_density_grad(const CopulaSpec& spec, Uniform u1, Uniform u2);

std::pair<double, double> copula_sample(const CopulaSpec& spec, Rng& rng);

/// h(u2 | u1) = dC(u1, u2) / du1.
double copula_conditional_cdf(const CopulaSpec& spec, double u2, double u1);

/// Closed-form Kendall's tau: 2 asin(theta) / pi for the elliptical families,
/// the Debye-function expression for Frank, 0 for the product copula.
double kendall_tau(const CopulaSpec& spec);
/// tau = 1 - 4 * integral of h(u2|u1) h(u1|u2) over the unit square, by quadrature.
double kendall_tau_numeric(const CopulaSpec& spec, int nodes = 200);

/// First Debye function D1(x) = (1/x) * integral_0^x t / (e^t - 1) dt.
double debye1(double x);

}  // namespace lossres::copula
