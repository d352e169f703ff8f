#include "lossres/copula/regression.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "lossres/error.hpp"
#include "lossres/optim.hpp"
#include "lossres/stats.hpp"

namespace lossres::copula {

namespace bm = boost::math;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MarginalEval {
  double log_f = 0.0;
  double dlogf_eta = 0.0;
  double dlogf_logshape = 0.0;
  Uniform u{0.5, 0.5};
  double du_eta = 0.0;
  double du_logshape = 0.0;
};

MarginalEval eval_marginal(MarginalFamily family, double eta, double shape, double y, bool with_uniform) {
  MarginalEval m;
  if (family == MarginalFamily::kLognormal) {
    const double z = (std::log(y) - eta) / shape;
    m.log_f = -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(shape) - std::log(y);
    m.dlogf_eta = z / shape;
    m.dlogf_logshape = z * z - 1.0;
    if (with_uniform) {
      static const bm::normal_distribution<double> normal;
      const double pdf = bm::pdf(normal, z);
      m.u = {bm::cdf(normal, z), bm::cdf(bm::complement(normal, z))};
      m.du_eta = -pdf / shape;
      m.du_logshape = -pdf * z;
    }
    return m;
  }
  const double x = y * shape * std::exp(-eta);
  m.log_f = shape * std::log(x) - x - std::lgamma(shape) - std::log(y);
  m.dlogf_eta = x - shape;
  m.dlogf_logshape = shape * (std::log(x) + 1.0 - bm::digamma(shape)) - x;
  if (with_uniform) {
    const double pdf = bm::gamma_p_derivative(shape, x);
    const double h = 1e-3 * shape;
    const auto p = [&](double a) { return bm::gamma_p(a, x); };
    const double dp_dshape = (p(shape - 2 * h) - 8.0 * p(shape - h) + 8.0 * p(shape + h) - p(shape + 2 * h)) / (12.0 * h);
    m.u = {bm::gamma_p(shape, x), bm::gamma_q(shape, x)};
    m.du_eta = -pdf * x;
    m.du_logshape = pdf * x + shape * dp_dshape;
  }
  return m;
}

std::string shape_name(MarginalFamily family) { return family == MarginalFamily::kLognormal ? "sigma" : "phi"; }

double invert_frank_tau(double tau) {
  if (std::abs(tau) < 1e-9) return 0.0;
  double lo = tau < 0.0 ? -80.0 : 1e-6;
  double hi = tau < 0.0 ? -1e-6 : 80.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (kendall_tau(CopulaSpec{CopulaFamily::kFrank, mid, 0.0}) < tau) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double MarginalSpec::eta(int i, int j, int company_index) const {
  double e = intercept + accident.at(static_cast<std::size_t>(i - 1)) + development.at(static_cast<std::size_t>(j - 1));
  if (!company.empty()) e += company.at(static_cast<std::size_t>(company_index));
  return e;
}

double MarginalSpec::mean(int i, int j, int company_index) const {
  return marginal_mean(family, eta(i, j, company_index), shape);
}

int CopulaRegressionFit::company_index(const std::string& name) const {
  if (!options.company_effects) return 0;
  for (std::size_t k = 0; k < companies.size(); ++k)
    if (companies[k] == name) return static_cast<int>(k);
  throw DataError("company '" + name + "' was not part of the fitted portfolio");
}

JointLikelihood::JointLikelihood(const PortfolioDataset& data, const FitOptions& options)
    : options_(options), origins_(data.origins()), companies_(static_cast<int>(data.size())) {
  if (data.empty()) throw DataError("copula fit: empty portfolio");
  if (origins_ < 2) throw DataError("copula fit: need at least two accident years");
  width_ = 2 * origins_ - 1 + (options_.company_effects ? companies_ - 1 : 0);
  for (int c = 0; c < companies_; ++c) {
    const auto& pair = data[static_cast<std::size_t>(c)];
    const auto y1 = standardize(pair.lob1);
    const auto y2 = standardize(pair.lob2);
    for (const auto& idx : upper_cells(origins_)) {
      const double a = y1.value(idx.accident, idx.development);
      const double b = y2.value(idx.accident, idx.development);
      if (!(a > 0.0) || !(b > 0.0))
        throw DataError("copula fit: non-positive loss at company '" + pair.company() + "' cell (" +
                        std::to_string(idx.accident) + "," + std::to_string(idx.development) + ")");
      cells_.push_back({c, idx.accident, idx.development, a, b});
    }
  }
  for (const auto& [lob, family] : {std::pair{"lob1", options_.lob1_family}, std::pair{"lob2", options_.lob2_family}}) {
    const std::string p = lob;
    names_.push_back(p + ".xi");
    for (int i = 2; i <= origins_; ++i) names_.push_back(p + ".alpha" + std::to_string(i));
    for (int j = 2; j <= origins_; ++j) names_.push_back(p + ".beta" + std::to_string(j));
    if (options_.company_effects)
      for (int c = 1; c < companies_; ++c) names_.push_back(p + ".company[" + data[static_cast<std::size_t>(c)].company() + "]");
    names_.push_back(p + "." + shape_name(family));
  }
  if (options_.copula != CopulaFamily::kProduct) names_.push_back("copula.theta");
  if (options_.copula == CopulaFamily::kStudentT) names_.push_back("copula.nu");
}

int JointLikelihood::copula_parameter_count() const {
  return CopulaSpec{options_.copula, 0.0, 0.0}.parameter_count();
}

Eigen::Index JointLikelihood::dimension() const { return 2 * (width_ + 1) + copula_parameter_count(); }

double JointLikelihood::eta(const Eigen::VectorXd& x, Eigen::Index offset, const Cell& c) const {
  double e = x(offset);
  if (c.i >= 2) e += x(offset + c.i - 1);
  if (c.j >= 2) e += x(offset + origins_ - 1 + c.j - 1);
  if (options_.company_effects && c.company >= 1) e += x(offset + 2 * origins_ - 2 + c.company);
  return e;
}

void JointLikelihood::add_design(Eigen::VectorXd& grad, Eigen::Index offset, const Cell& c, double d) const {
  grad(offset) += d;
  if (c.i >= 2) grad(offset + c.i - 1) += d;
  if (c.j >= 2) grad(offset + origins_ - 1 + c.j - 1) += d;
  if (options_.company_effects && c.company >= 1) grad(offset + 2 * origins_ - 2 + c.company) += d;
}

std::pair<double, double> JointLikelihood::natural(const Eigen::VectorXd& x, Eigen::Index k) const {
  const Eigen::Index cop = 2 * (width_ + 1);
  if (k == width_ || k == 2 * width_ + 1) {
    const double v = std::exp(x(k));
    return {v, v};
  }
  if (k < cop) return {x(k), 1.0};
  const double t = x(k);
  if (k == cop) {
    if (options_.copula == CopulaFamily::kFrank) {
      if (options_.transform == ThetaTransform::kStandard) return {t, 1.0};
      return {std::sinh(t), std::cosh(t)};
    }
    if (options_.transform == ThetaTransform::kStandard) {
      const double r = std::tanh(t);
      return {r, 1.0 - r * r};
    }
    const double s = std::sqrt(1.0 + t * t);
    return {t / s, 1.0 / (s * s * s)};
  }
  const double e = std::exp(t);
  return {kMinDegreesOfFreedom + e, e};
}

CopulaSpec JointLikelihood::copula_from(const Eigen::VectorXd& x) const {
  CopulaSpec spec{options_.copula, 0.0, 0.0};
  const Eigen::Index cop = 2 * (width_ + 1);
  if (spec.family != CopulaFamily::kProduct) spec.theta = natural(x, cop).first;
  if (spec.family == CopulaFamily::kStudentT) spec.nu = natural(x, cop + 1).first;
  return spec;
}

void JointLikelihood::set_copula(Eigen::VectorXd& x, const CopulaSpec& spec) const {
  const Eigen::Index cop = 2 * (width_ + 1);
  if (options_.copula == CopulaFamily::kProduct) return;
  const double th = spec.theta;
  if (options_.copula == CopulaFamily::kFrank) {
    x(cop) = options_.transform == ThetaTransform::kStandard ? th : std::asinh(th);
  } else {
    x(cop) = options_.transform == ThetaTransform::kStandard ? std::atanh(th) : th / std::sqrt(1.0 - th * th);
  }
  if (options_.copula == CopulaFamily::kStudentT) x(cop + 1) = std::log(spec.nu - kMinDegreesOfFreedom);
}

MarginalSpec JointLikelihood::marginal_from(const Eigen::VectorXd& x, Lob lob) const {
  const Eigen::Index off = lob == Lob::kLob1 ? 0 : width_ + 1;
  MarginalSpec m;
  m.family = lob == Lob::kLob1 ? options_.lob1_family : options_.lob2_family;
  m.intercept = x(off);
  m.accident.assign(static_cast<std::size_t>(origins_), 0.0);
  m.development.assign(static_cast<std::size_t>(origins_), 0.0);
  for (int i = 2; i <= origins_; ++i) m.accident[static_cast<std::size_t>(i - 1)] = x(off + i - 1);
  for (int j = 2; j <= origins_; ++j) m.development[static_cast<std::size_t>(j - 1)] = x(off + origins_ - 1 + j - 1);
  if (options_.company_effects) {
    m.company.assign(static_cast<std::size_t>(companies_), 0.0);
    for (int c = 1; c < companies_; ++c) m.company[static_cast<std::size_t>(c)] = x(off + 2 * origins_ - 2 + c);
  }
  m.shape = std::exp(x(off + width_));
  return m;
}

double JointLikelihood::negative_log_likelihood(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  return negative_log_likelihood(x, grad, options_.copula);
}

double JointLikelihood::negative_log_likelihood(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                                                CopulaFamily family) const {
  if (x.size() != dimension()) throw DomainError("negative_log_likelihood: wrong parameter dimension");
  if (grad) grad->setZero(dimension());
  if (!x.allFinite()) return kInf;
  const Eigen::Index off1 = 0, ls1 = width_, off2 = width_ + 1, ls2 = 2 * width_ + 1, cop = 2 * (width_ + 1);
  const double shape1 = std::exp(x(ls1));
  const double shape2 = std::exp(x(ls2));
  if (!(shape1 > 0.0) || !(shape2 > 0.0) || !std::isfinite(shape1) || !std::isfinite(shape2)) return kInf;

  CopulaSpec spec = copula_from(x);
  if (family != options_.copula) spec = CopulaSpec{family, 0.0, 0.0};
  const bool dependent = spec.family != CopulaFamily::kProduct;
  if (dependent) {
    if (spec.family != CopulaFamily::kFrank && !(std::abs(spec.theta) < 1.0)) return kInf;
    if (spec.family == CopulaFamily::kStudentT && !std::isfinite(spec.nu)) return kInf;
  }

  double ll = 0.0;
  double d_theta = 0.0, d_nu = 0.0;
  for (const Cell& c : cells_) {
    const double eta1 = eta(x, off1, c);
    const double eta2 = eta(x, off2, c);
    const auto m1 = eval_marginal(options_.lob1_family, eta1, shape1, c.y1, dependent);
    const auto m2 = eval_marginal(options_.lob2_family, eta2, shape2, c.y2, dependent);
    ll += m1.log_f + m2.log_f;
    double g_eta1 = m1.dlogf_eta, g_ls1 = m1.dlogf_logshape;
    double g_eta2 = m2.dlogf_eta, g_ls2 = m2.dlogf_logshape;
    if (dependent) {
      const auto cg = copula_log_density_grad(spec, m1.u, m2.u);
      ll += cg.value;
      g_eta1 += cg.d_u1 * m1.du_eta;
      g_ls1 += cg.d_u1 * m1.du_logshape;
      g_eta2 += cg.d_u2 * m2.du_eta;
      g_ls2 += cg.d_u2 * m2.du_logshape;
      d_theta += cg.d_theta;
      d_nu += cg.d_nu;
    }
    if (grad) {
      add_design(*grad, off1, c, g_eta1);
      add_design(*grad, off2, c, g_eta2);
      (*grad)(ls1) += g_ls1;
      (*grad)(ls2) += g_ls2;
    }
  }
  if (!std::isfinite(ll)) return kInf;
  if (grad) {
    if (dependent && family == options_.copula) {
      (*grad)(cop) += d_theta * natural(x, cop).second;
      if (spec.family == CopulaFamily::kStudentT) (*grad)(cop + 1) += d_nu * natural(x, cop + 1).second;
    }
    *grad = -*grad;
  }
  return -ll;
}

Eigen::VectorXd JointLikelihood::marginal_start(Lob lob) const {
  const auto n = static_cast<Eigen::Index>(cells_.size());
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, width_);
  Eigen::VectorXd logy(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Cell& c = cells_[static_cast<std::size_t>(k)];
    Eigen::VectorXd row = Eigen::VectorXd::Zero(width_);
    add_design(row, 0, c, 1.0);
    design.row(k) = row.transpose();
    logy(k) = std::log(lob == Lob::kLob1 ? c.y1 : c.y2);
  }
  Eigen::VectorXd beta = design.colPivHouseholderQr().solve(logy);
  const Eigen::VectorXd fitted = design * beta;
  Eigen::VectorXd out(width_ + 1);
  const MarginalFamily family = lob == Lob::kLob1 ? options_.lob1_family : options_.lob2_family;
  if (family == MarginalFamily::kLognormal) {
    const double rss = (logy - fitted).squaredNorm();
    out.head(width_) = beta;
    out(width_) = std::log(std::max(std::sqrt(rss / static_cast<double>(n)), 1e-8));
    return out;
  }
  // Gamma: scale the log-linear fit to match the mean, shape by moments of y / mu.
  const Eigen::ArrayXd ratio = (logy - fitted).array().exp();
  const double m = ratio.mean();
  const double v = (ratio / m - 1.0).square().mean();
  beta(0) += std::log(m);
  out.head(width_) = beta;
  out(width_) = std::log(1.0 / std::max(v, 1e-8));
  return out;
}

CopulaRegressionFit fit(const PortfolioDataset& data, const FitOptions& options) {
  const JointLikelihood lik(data, options);
  const Eigen::Index dim = lik.dimension();
  const Eigen::Index marg = dim - lik.copula_parameter_count();
  const Eigen::Index width = lik.design_width();
  BfgsOptions bfgs{options.gradient_tolerance, options.max_iterations};

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  x.segment(0, width + 1) = lik.marginal_start(Lob::kLob1);
  x.segment(width + 1, width + 1) = lik.marginal_start(Lob::kLob2);

  int iterations = 0, evaluations = 0;
  // Stage 1: marginals alone (the independence fit).
  const VectorObjective independent = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
    Eigen::VectorXd full = x;
    full.head(marg) = z;
    Eigen::VectorXd gf;
    const double v = lik.negative_log_likelihood(full, &gf, CopulaFamily::kProduct);
    g = gf.head(marg);
    return v;
  };
  auto stage = minimize_bfgs(independent, x.head(marg), bfgs);
  if (!stage.converged) stage = polish_newton(independent, std::move(stage), bfgs);
  x.head(marg) = stage.x;
  iterations += stage.iterations;
  evaluations += stage.evaluations;

  if (options.copula != CopulaFamily::kProduct) {
    // Stage 2: dependence parameters with marginals fixed, from the residual tau.
    std::vector<double> u1, u2;
    const auto m1 = lik.marginal_from(x, Lob::kLob1);
    const auto m2 = lik.marginal_from(x, Lob::kLob2);
    for (const auto& pair : data) {
      const int c = options.company_effects ? static_cast<int>(*data.index_of(pair.company())) : 0;
      const auto y1 = standardize(pair.lob1);
      const auto y2 = standardize(pair.lob2);
      for (const auto& idx : upper_cells(data.origins())) {
        u1.push_back(marginal_cdf(m1.family, m1.eta(idx.accident, idx.development, c), m1.shape,
                                  y1.value(idx.accident, idx.development)));
        u2.push_back(marginal_cdf(m2.family, m2.eta(idx.accident, idx.development, c), m2.shape,
                                  y2.value(idx.accident, idx.development)));
      }
    }
    const double tau = std::clamp(lossres::kendall_tau(u1, u2), -0.9, 0.9);
    CopulaSpec init{options.copula, 0.0, 0.0};
    if (options.copula == CopulaFamily::kFrank) {
      init.theta = invert_frank_tau(tau);
    } else {
      init.theta = std::sin(std::numbers::pi * tau / 2.0);
      init.nu = 5.0;
    }
    lik.set_copula(x, init);
    const VectorObjective dependence = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
      Eigen::VectorXd full = x;
      full.tail(dim - marg) = z;
      Eigen::VectorXd gf;
      const double v = lik.negative_log_likelihood(full, &gf);
      g = gf.tail(dim - marg);
      return v;
    };
    stage = minimize_bfgs(dependence, x.tail(dim - marg), bfgs);
    x.tail(dim - marg) = stage.x;
    iterations += stage.iterations;
    evaluations += stage.evaluations;

    // Stage 3: everything jointly.
    const VectorObjective joint = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
      return lik.negative_log_likelihood(z, &g);
    };
    stage = minimize_bfgs(joint, x, bfgs);
    if (!stage.converged) stage = polish_newton(joint, std::move(stage), bfgs);
    x = stage.x;
    iterations += stage.iterations;
    evaluations += stage.evaluations;
  }

  CopulaRegressionFit out;
  out.options = options;
  out.origins = data.origins();
  for (const auto& pair : data) out.companies.push_back(pair.company());
  out.lob1 = lik.marginal_from(x, Lob::kLob1);
  out.lob2 = lik.marginal_from(x, Lob::kLob2);
  out.copula = lik.copula_from(x);
  out.unconstrained = x;
  out.parameter_names = lik.parameter_names();
  out.log_likelihood = -stage.value;
  out.parameter_count = static_cast<int>(dim);
  out.observation_count = static_cast<int>(2 * lik.cell_count());
  out.aic = 2.0 * dim - 2.0 * out.log_likelihood;
  out.bic = static_cast<double>(dim) * std::log(static_cast<double>(out.observation_count)) - 2.0 * out.log_likelihood;
  out.convergence = {stage.converged, iterations, evaluations, stage.gradient_norm, stage.message};

  if (options.compute_covariance) {
    const VectorObjective joint = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
      return lik.negative_log_likelihood(z, &g);
    };
    const Eigen::MatrixXd hess = numerical_hessian(joint, x);
    // Coordinates with no curvature (a parameter pinned at its bound) are held
    // fixed; the covariance of the rest comes from the reduced Hessian.
    const double scale = hess.diagonal().cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < dim; ++k)
      if (hess(k, k) > 1e-8 * scale) keep.push_back(k);
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd reduced(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) reduced(a, b) = hess(keep[a], keep[b]);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
    if (m > 0 && reduced.allFinite() && eig.info() == Eigen::Success &&
        eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().maxCoeff()) {
      const Eigen::MatrixXd inv =
          eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
      out.covariance = Eigen::MatrixXd::Constant(dim, dim, std::numeric_limits<double>::quiet_NaN());
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) out.covariance(keep[a], keep[b]) = inv(a, b);
      out.covariance_available = true;
    }
  }
  return out;
}

CopulaRegressionFit fit(const TrianglePair& pair, const FitOptions& options) {
  return fit(PortfolioDataset({pair}), options);
}

Reserves fitted_reserves(const CopulaRegressionFit& fit, const TrianglePair& pair) {
  const int origins = pair.lob1.origins();
  if (origins != fit.origins) throw DataError("fitted_reserves: accident-year count differs from the fit");
  const int c = fit.company_index(pair.company());
  const double r1 = reserve_from_standardized(pair.lob1.premiums(), origins,
                                              [&](int i, int j) { return fit.lob1.mean(i, j, c); });
  const double r2 = reserve_from_standardized(pair.lob2.premiums(), origins,
                                              [&](int i, int j) { return fit.lob2.mean(i, j, c); });
  return Reserves::of(r1, r2);
}

double residual_kendall_tau(const CopulaRegressionFit& fit, const TrianglePair& pair) {
  const int c = fit.company_index(pair.company());
  const auto y1 = standardize(pair.lob1);
  const auto y2 = standardize(pair.lob2);
  std::vector<double> e1, e2;
  for (const auto& idx : upper_cells(fit.origins)) {
    const int i = idx.accident, j = idx.development;
    // Standardized residuals: log-scale z for lognormal, y / mu for gamma.
    const auto residual = [&](const MarginalSpec& m, double y) {
      const double eta = m.eta(i, j, c);
      return m.family == MarginalFamily::kLognormal ? (std::log(y) - eta) / m.shape : y / (std::exp(eta) / m.shape);
    };
    e1.push_back(residual(fit.lob1, y1.value(i, j)));
    e2.push_back(residual(fit.lob2, y2.value(i, j)));
  }
  return lossres::kendall_tau(e1, e2);
}

std::vector<ParameterInterval> parameter_ci(const CopulaRegressionFit& fit, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("parameter_ci: level must lie in (0, 1)");
  const double z = bm::quantile(bm::normal_distribution<double>(), 0.5 + level / 2.0);
  // Rebuild the transform map without data: only the layout matters.
  const Eigen::Index width = static_cast<Eigen::Index>(fit.lob1.accident.size() * 2 - 1 +
                                                      (fit.options.company_effects ? fit.companies.size() - 1 : 0));
  const Eigen::Index cop = 2 * (width + 1);
  const auto natural = [&](Eigen::Index k, double t) {
    if (k == width || k == 2 * width + 1) return std::exp(t);
    if (k < cop) return t;
    if (k == cop) {
      if (fit.options.copula == CopulaFamily::kFrank)
        return fit.options.transform == ThetaTransform::kStandard ? t : std::sinh(t);
      return fit.options.transform == ThetaTransform::kStandard ? std::tanh(t) : t / std::sqrt(1.0 + t * t);
    }
    return kMinDegreesOfFreedom + std::exp(t);
  };
  std::vector<ParameterInterval> out;
  for (Eigen::Index k = 0; k < fit.unconstrained.size(); ++k) {
    ParameterInterval p;
    p.name = fit.parameter_names.at(static_cast<std::size_t>(k));
    p.estimate = natural(k, fit.unconstrained(k));
    if (fit.covariance_available && fit.covariance(k, k) > 0.0) {
      const double se = std::sqrt(fit.covariance(k, k));
      const double a = natural(k, fit.unconstrained(k) - z * se);
      const double b = natural(k, fit.unconstrained(k) + z * se);
      p.lower = std::min(a, b);
      p.upper = std::max(a, b);
      p.available = std::isfinite(p.lower) && std::isfinite(p.upper);
    }
    out.push_back(p);
  }
  return out;
}

nlohmann::json fit_report(const CopulaRegressionFit& fit, double level) {
  nlohmann::json j;
  j["copula"] = to_string(fit.copula.family);
  j["marginals"] = {to_string(fit.lob1.family), to_string(fit.lob2.family)};
  j["company_effects"] = fit.options.company_effects;
  j["log_likelihood"] = fit.log_likelihood;
  j["aic"] = fit.aic;
  j["bic"] = fit.bic;
  j["parameter_count"] = fit.parameter_count;
  j["observation_count"] = fit.observation_count;
  if (fit.copula.family != CopulaFamily::kProduct) j["theta"] = fit.copula.theta;
  if (fit.copula.family == CopulaFamily::kStudentT) j["nu"] = fit.copula.nu;
  j["kendall_tau_implied"] = kendall_tau(fit.copula);
  j["convergence"] = {{"converged", fit.convergence.converged},
                      {"iterations", fit.convergence.iterations},
                      {"evaluations", fit.convergence.evaluations},
                      {"gradient_norm", fit.convergence.gradient_norm},
                      {"message", fit.convergence.message}};
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : parameter_ci(fit, level)) {
    nlohmann::json e{{"name", p.name}, {"estimate", p.estimate}};
    if (p.available) {
      e["lower"] = p.lower;
      e["upper"] = p.upper;
    } else {
      e["lower"] = nullptr;
      e["upper"] = nullptr;
    }
    params.push_back(e);
  }
  j["parameters"] = params;
  j["ci_level"] = level;
  return j;
}

}  // namespace lossres::copula
