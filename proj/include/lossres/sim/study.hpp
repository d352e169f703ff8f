#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "lossres/copula/distributions.hpp"
#include "lossres/dt/train.hpp"
#include "lossres/parallel.hpp"
#include "lossres/resample/edt.hpp"
#include "lossres/sim/params.hpp"

namespace lossres::sim {

// Input-length sweep.

struct SweepConfig {
  std::vector<int> lengths;  ///< empty means 1..I-1
  int folds = 5;             ///< 1 uses the single hold-out split of `training`
  dt::TrainConfig training;  ///< `history` is overridden per length
};

struct SweepPoint {
  int length = 0;
  double validation_loss = 0.0;  ///< mean of the fold losses
  std::vector<double> fold_losses;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  int best_length = 0;
};

/// For each input-length cap, trains on every fold from the same initial weights
/// and records the best validation loss. Folds are shared across lengths.
SweepResult sequence_length_sweep(const PortfolioDataset& data, const SweepConfig& config,
                                  const ParallelOptions& parallel = {});

nlohmann::json to_json(const SweepResult& result);
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);

// Simulation study.

struct StudyConfig {
  int pairs = 10;
  int replications = 200;
  std::uint64_t seed = 2024;
  dt::TrainConfig dt = default_dt();
  dt::TrainConfig fine_tune = default_fine_tune();
  std::vector<copula::CopulaFamily> copulas{copula::CopulaFamily::kProduct, copula::CopulaFamily::kGaussian,
                                            copula::CopulaFamily::kFrank, copula::CopulaFamily::kStudentT};
  std::vector<copula::CopulaFamily> bootstrap_copulas{copula::CopulaFamily::kProduct,
                                                      copula::CopulaFamily::kGaussian};
  std::vector<resample::EdtGenerator> edt_generators{resample::EdtGenerator::kCopulaSynth,
                                                     resample::EdtGenerator::kBlockBootstrap};
  bool warm_start = true;
  std::vector<double> levels{0.8, 0.85, 0.9, 0.95, 0.99};
  double ci_level = 0.95;
  int truth_draws = 5000;  ///< simulated squares behind the true risk capital

  static dt::TrainConfig default_dt();
  static dt::TrainConfig default_fine_tune();
  void validate() const;
};

nlohmann::json to_json(const StudyConfig& config);
StudyConfig study_config_from_json(const nlohmann::json& j);

/// Point reserves of one model for every pair; failed pairs keep their error.
struct PointModel {
  std::string model;
  std::vector<Reserves> reserves;
  std::vector<std::string> errors;  ///< empty string where the pair succeeded
  double mape1 = 0.0;
  double mape2 = 0.0;
  int used = 0;
};

struct PairSummary {
  int kept = 0;
  int failures = 0;
  double mean = 0.0;
  double std = 0.0;
  double cv = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  bool covered = false;
  std::vector<double> tvar;       ///< total, per level
  std::vector<double> rc_joint;   ///< per level
  std::vector<double> rc_silo;    ///< per level, from the pipeline's own marginals
  std::string error;
};

/// Predictive distributions of one pipeline across pairs.
struct Pipeline {
  std::string name;  ///< "copula:<family>" or "edt:<generator>"
  std::vector<PairSummary> pairs;
  int used = 0;           ///< pairs with at least two kept draws
  double mean_cv = 0.0;
  double coverage = 0.0;
  double mean_ci_width = 0.0;
  std::vector<double> mean_rc_joint;
  std::vector<double> mean_rc_silo;
  std::vector<double> median_tvar;
};

struct OrderingCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct StudyReport {
  StudyConfig config;
  SimParams params;
  Reserves truth;                    ///< analytic expected reserves
  std::vector<std::string> companies;
  std::vector<Reserves> realized;    ///< lower-triangle sums of each simulated square
  std::vector<PointModel> points;    ///< "dt" first, then the copulas
  std::vector<Pipeline> pipelines;
  std::vector<double> true_rc;       ///< risk capital of the true reserve distribution
  std::vector<double> true_tvar;
  int dt_best_epoch = 0;
  double dt_validation_loss = 0.0;

  const PointModel& point(const std::string& model) const;
  const Pipeline& pipeline(const std::string& name) const;
};

/// Simulates the portfolio, trains the DT, fits the copulas, builds the
/// predictive distributions and summarizes them against the truth.
StudyReport run_study(const SimParams& params, const StudyConfig& config, const ParallelOptions& parallel = {});

/// Desk-scale ordering checks on a finished report.
std::vector<OrderingCheck> study_orderings(const StudyReport& report);

nlohmann::json to_json(const StudyReport& report);
/// report.json plus CSV tables and plot data under `dir`; returns the files written.
std::vector<std::filesystem::path> write_study(const StudyReport& report, const std::filesystem::path& dir);

}  // namespace lossres::sim
