#include "lossres/sim/params.hpp"

#include <cmath>

#include "lossres/error.hpp"

namespace lossres::sim {

namespace {

void require_length(const std::vector<double>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n) throw DomainError(std::string("sim params: ") + what + " needs I entries");
}

// Sums of omega_i * exp(alpha_i + beta_j) over the lower cells, per LOB, without
// the intercept.
std::pair<double, double> lower_exposure(const SimParams& p) {
  double s1 = 0.0, s2 = 0.0;
  for (const auto& c : lower_cells(p.origins)) {
    const auto i = static_cast<std::size_t>(c.accident - 1);
    const auto j = static_cast<std::size_t>(c.development - 1);
    s1 += p.premium1[i] * std::exp(p.alpha1[i] + p.beta1[j] + 0.5 * p.shape1 * p.shape1);
    s2 += p.premium2[i] * std::exp(p.alpha2[i] + p.beta2[j]);
  }
  return {s1, s2};
}

}  // namespace

void SimParams::validate() const {
  if (origins < 2) throw DomainError("sim params: need at least 2 accident years");
  require_length(alpha1, origins, "alpha1");
  require_length(alpha2, origins, "alpha2");
  require_length(beta1, origins, "beta1");
  require_length(beta2, origins, "beta2");
  require_length(premium1, origins, "premium1");
  require_length(premium2, origins, "premium2");
  if (alpha1[0] != 0.0 || alpha2[0] != 0.0 || beta1[0] != 0.0 || beta2[0] != 0.0)
    throw DomainError("sim params: first-year effects must be zero");
  for (double w : premium1)
    if (!(w > 0.0)) throw DomainError("sim params: premiums must be positive");
  for (double w : premium2)
    if (!(w > 0.0)) throw DomainError("sim params: premiums must be positive");
  if (!(shape1 > 0.0) || !(shape2 > 0.0)) throw DomainError("sim params: shapes must be positive");
  copula.validate();
}

SimParams study_params() {
  SimParams p;
  p.alpha1 = {0.0, -0.03, -0.03, -0.13, -0.17, -0.18, -0.18, -0.24, -0.27, -0.21};
  p.alpha2 = {0.0, -0.14, -0.15, -0.30, -0.29, -0.27, -0.14, -0.10, 0.17, -0.12};
  p.beta1 = {0.0, -0.23, -1.05, -1.65, -2.26, -3.02, -3.68, -4.50, -4.91, -5.92};
  p.beta2 = {0.0, 0.20, -0.02, -0.41, -1.06, -1.47, -2.10, -2.81, -3.12, -4.18};
  p.premium1 = {4711333, 5335525, 5947504, 6354197, 6738172, 7079444, 7254832, 7739379, 8154065, 8435918};
  p.premium2 = {267666, 274526, 268161, 276821, 270214, 280568, 344915, 371139, 323753, 221448};
  calibrate_intercepts(p, kTargetReserve1, kTargetReserve2);
  return p;
}

Reserves expected_reserves(const SimParams& params) {
  params.validate();
  const auto [s1, s2] = lower_exposure(params);
  return Reserves::of(std::exp(params.xi1) * s1, std::exp(params.xi2) * s2);
}

void calibrate_intercepts(SimParams& params, double reserve1, double reserve2) {
  if (!(reserve1 > 0.0) || !(reserve2 > 0.0)) throw DomainError("calibrate_intercepts: targets must be positive");
  params.xi1 = 0.0;
  params.xi2 = 0.0;
  params.validate();
  const auto [s1, s2] = lower_exposure(params);
  params.xi1 = std::log(reserve1 / s1);
  params.xi2 = std::log(reserve2 / s2);
}

nlohmann::json to_json(const SimParams& p) {
  return nlohmann::json{{"origins", p.origins},
                        {"xi1", p.xi1},
                        {"xi2", p.xi2},
                        {"alpha1", p.alpha1},
                        {"alpha2", p.alpha2},
                        {"beta1", p.beta1},
                        {"beta2", p.beta2},
                        {"premium1", p.premium1},
                        {"premium2", p.premium2},
                        {"copula", std::string(copula::to_string(p.copula.family))},
                        {"theta", p.copula.theta},
                        {"nu", p.copula.nu},
                        {"shape1", p.shape1},
                        {"shape2", p.shape2}};
}

SimParams sim_params_from_json(const nlohmann::json& j) {
  SimParams p = study_params();
  p.origins = j.value("origins", p.origins);
  p.xi1 = j.value("xi1", p.xi1);
  p.xi2 = j.value("xi2", p.xi2);
  p.alpha1 = j.value("alpha1", p.alpha1);
  p.alpha2 = j.value("alpha2", p.alpha2);
  p.beta1 = j.value("beta1", p.beta1);
  p.beta2 = j.value("beta2", p.beta2);
  p.premium1 = j.value("premium1", p.premium1);
  p.premium2 = j.value("premium2", p.premium2);
  if (j.contains("copula")) p.copula.family = copula::parse_copula_family(j.at("copula").get<std::string>());
  p.copula.theta = j.value("theta", p.copula.theta);
  p.copula.nu = j.value("nu", p.copula.nu);
  p.shape1 = j.value("shape1", p.shape1);
  p.shape2 = j.value("shape2", p.shape2);
  p.validate();
  return p;
}

}  // namespace lossres::sim
