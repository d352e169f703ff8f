#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "lossres/copula/distributions.hpp"
#include "lossres/triangle.hpp"

namespace lossres::copula {

/// Marginal regression eta_ij = xi + alpha_i + beta_j (+ b_c). Effects are stored
/// 1-based with alpha[0] = beta[0] = company[0] = 0 for identification.
struct MarginalSpec {
  MarginalFamily family = MarginalFamily::kLognormal;
  double intercept = 0.0;
  std::vector<double> accident;
  std::vector<double> development;
  std::vector<double> company;  ///< empty without company effects
  double shape = 1.0;           ///< sigma (lognormal) or phi (gamma)

  double eta(int i, int j, int company_index = 0) const;
  double mean(int i, int j, int company_index = 0) const;
};

/// Map from the unconstrained optimizer scale to the dependence parameter.
enum class ThetaTransform {
  kStandard,     ///< tanh for gaussian/t, identity for frank
  kAlternative,  ///< x / sqrt(1 + x^2) for gaussian/t, sinh for frank
};

struct FitOptions {
  MarginalFamily lob1_family = MarginalFamily::kLognormal;
  MarginalFamily lob2_family = MarginalFamily::kGamma;
  CopulaFamily copula = CopulaFamily::kProduct;
  bool company_effects = false;
  double gradient_tolerance = 1e-6;
  int max_iterations = 5000;
  ThetaTransform transform = ThetaTransform::kStandard;
  bool compute_covariance = true;
};

struct ConvergenceReport {
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  double gradient_norm = 0.0;
  std::string message;
};

struct CopulaRegressionFit {
  MarginalSpec lob1;
  MarginalSpec lob2;
  CopulaSpec copula;
  FitOptions options;
  int origins = 0;
  std::vector<std::string> companies;
  double log_likelihood = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  int parameter_count = 0;
  int observation_count = 0;  ///< observed cells times two lines
  ConvergenceReport convergence;
  Eigen::VectorXd unconstrained;
  std::vector<std::string> parameter_names;
  Eigen::MatrixXd covariance;  ///< inverse Hessian of -loglik, unconstrained scale
  bool covariance_available = false;

  int company_index(const std::string& company) const;
};

/// Negative joint log-likelihood over the upper triangles of a portfolio, as a
/// function of the unconstrained vector [b1, log shape1, b2, log shape2, copula...].
class JointLikelihood {
 public:
  JointLikelihood(const PortfolioDataset& data, const FitOptions& options);

  Eigen::Index dimension() const;
  Eigen::Index design_width() const { return width_; }
  int copula_parameter_count() const;
  const std::vector<std::string>& parameter_names() const { return names_; }

  /// Returns +inf outside the admissible region. `family` overrides the copula.
  double negative_log_likelihood(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;
  double negative_log_likelihood(const Eigen::VectorXd& x, Eigen::VectorXd* grad, CopulaFamily family) const;

  CopulaSpec copula_from(const Eigen::VectorXd& x) const;
  MarginalSpec marginal_from(const Eigen::VectorXd& x, Lob lob) const;
  /// Inverse of copula_from on the dependence parameters (writes the tail of x).
  void set_copula(Eigen::VectorXd& x, const CopulaSpec& spec) const;
  /// Natural-scale value of coordinate k and its derivative with respect to x(k).
  std::pair<double, double> natural(const Eigen::VectorXd& x, Eigen::Index k) const;

  /// Closed-form lognormal or moment-matched gamma starting values for one LOB.
  Eigen::VectorXd marginal_start(Lob lob) const;

  std::size_t cell_count() const { return cells_.size(); }

 private:
  struct Cell {
    int company;
    int i;
    int j;
    double y1;
    double y2;
  };

  double eta(const Eigen::VectorXd& x, Eigen::Index offset, const Cell& c) const;
  void add_design(Eigen::VectorXd& grad, Eigen::Index offset, const Cell& c, double d) const;

  FitOptions options_;
  int origins_;
  int companies_;
  Eigen::Index width_;
  std::vector<Cell> cells_;
  std::vector<std::string> names_;
};

CopulaRegressionFit fit(const PortfolioDataset& data, const FitOptions& options);
CopulaRegressionFit fit(const TrianglePair& pair, const FitOptions& options);

/// Point reserves: expected lower-triangle values scaled by the pair's premiums.
Reserves fitted_reserves(const CopulaRegressionFit& fit, const TrianglePair& pair);

/// Kendall's tau between the two LOBs' standardized marginal residuals.
double residual_kendall_tau(const CopulaRegressionFit& fit, const TrianglePair& pair);

struct ParameterInterval {
  std::string name;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool available = false;
};

/// Wald intervals built on the unconstrained scale and mapped back.
std::vector<ParameterInterval> parameter_ci(const CopulaRegressionFit& fit, double level = 0.95);

nlohmann::json fit_report(const CopulaRegressionFit& fit, double level = 0.95);

}  // namespace lossres::copula
