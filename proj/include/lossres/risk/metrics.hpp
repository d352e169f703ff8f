#pragma once

#include <json.hpp>
#include <span>
#include <vector>

namespace lossres::risk {

/// Default TVaR ladder levels.
inline const std::vector<double> kDefaultLevels{0.6, 0.8, 0.85, 0.9, 0.95, 0.99};

/// The ceil(n k)-th order statistic (1-based) of the sample.
double var(std::span<const double> sample, double k);
/// Mean of the observations at or above var(sample, k).
double tvar(std::span<const double> sample, double k);
/// TVaR_k - TVaR_60%; requires k >= 0.6.
double risk_capital(std::span<const double> sample, double k);
/// Sum of the per-line risk capitals computed on the marginal samples.
double silo(std::span<const double> lob1, std::span<const double> lob2, double k);
/// (silo - model) / silo; requires silo > 0.
double gain(double rc_silo, double rc_model);

struct LevelRow {
  double level = 0.0;
  double var = 0.0;
  double tvar = 0.0;
  double risk_capital = 0.0;  ///< NaN below the 60% base level
};

struct RiskReport {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double cv = 0.0;
  double point_reserve = 0.0;
  double bias_pct = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  std::vector<LevelRow> ladder;
};

/// Summary of a total-reserve sample; B >= 2.
RiskReport summarize(std::span<const double> total, double point_reserve,
                     const std::vector<double>& levels = kDefaultLevels);

nlohmann::json to_json(const RiskReport& report);

}  // namespace lossres::risk
