#pragma once

#include <cstdint>
#include <json.hpp>
#include <vector>

#include "lossres/copula/distributions.hpp"
#include "lossres/triangle.hpp"

namespace lossres::sim {

/// Generating model for one simulated triangle pair: lognormal LOB1, gamma LOB2,
/// eta_ij = xi + alpha_i + beta_j, a copula linking the two cells.
struct SimParams {
  int origins = 10;
  double xi1 = 0.0;
  double xi2 = 0.0;
  std::vector<double> alpha1;  ///< length I, alpha1[0] = 0
  std::vector<double> alpha2;
  std::vector<double> beta1;   ///< length I, beta1[0] = 0
  std::vector<double> beta2;
  std::vector<double> premium1;
  std::vector<double> premium2;
  copula::CopulaSpec copula{copula::CopulaFamily::kGaussian, -0.36, 0.0};
  double shape1 = 0.089;  ///< lognormal sigma
  double shape2 = 2.0;    ///< gamma phi

  void validate() const;
  double eta1(int i, int j) const { return xi1 + alpha1.at(i - 1) + beta1.at(j - 1); }
  double eta2(int i, int j) const { return xi2 + alpha2.at(i - 1) + beta2.at(j - 1); }
};

/// Target expected reserves used to calibrate the intercepts.
inline constexpr double kTargetReserve1 = 6423246.0;
inline constexpr double kTargetReserve2 = 495925.0;

/// Effects and premiums of the study design, intercepts calibrated so that the
/// expected lower-triangle reserves equal kTargetReserve1 and kTargetReserve2.
SimParams study_params();

/// Sum over the lower cells of omega_i * E[Y_ij] per LOB.
Reserves expected_reserves(const SimParams& params);

/// Sets xi1 and xi2 so that expected_reserves matches the targets exactly.
void calibrate_intercepts(SimParams& params, double reserve1, double reserve2);

nlohmann::json to_json(const SimParams& params);
SimParams sim_params_from_json(const nlohmann::json& j);

}  // namespace lossres::sim
