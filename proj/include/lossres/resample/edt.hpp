#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lossres/dt/train.hpp"
#include "lossres/parallel.hpp"
#include "lossres/resample/distribution.hpp"

namespace lossres::resample {

/// Standardized values of one development year, one row per (company, accident year).
struct DevYearTable {
  int development = 0;
  std::vector<std::string> company;
  std::vector<int> accident;
  std::vector<double> y1;
  std::vector<double> y2;

  std::size_t rows() const { return y1.size(); }
};

/// Tables for j = 1..I from full squares (observed upper plus predicted lower cells).
std::vector<DevYearTable> dev_year_tables(const std::vector<TrianglePair>& squares);

/// Empirical CDF with linear interpolation between order statistics, which sit at
/// plotting positions (k - 0.5)/n, and exponential tails beyond the extremes.
class EmpiricalMarginal {
 public:
  EmpiricalMarginal() = default;
  explicit EmpiricalMarginal(std::vector<double> values);

  bool degenerate() const { return degenerate_; }
  std::size_t size() const { return sorted_.size(); }
  double cdf(double x) const;
  double quantile(double u) const;

 private:
  std::vector<double> sorted_;
  double tail_scale_ = 1.0;
  bool degenerate_ = false;
};

/// Gaussian copula over two empirical marginals.
struct GaussianCopulaSynthesizer {
  EmpiricalMarginal f1;
  EmpiricalMarginal f2;
  double rho = 0.0;
  bool projected = false;  ///< the estimate was clamped back into [-1, 1]

  /// Normal scores of the rows give the correlation; a constant column gets rho = 0.
  static GaussianCopulaSynthesizer fit(const std::vector<double>& y1, const std::vector<double>& y2);
  std::pair<double, double> sample(Rng& rng) const;
};

struct SynthesisOptions {
  bool identity_correlation = false;  ///< force rho = 0
};

/// Synthetic upper triangle pairs shaped like `like`: same companies, origins and
/// premiums. Each development year draws I rows per company from its table's
/// synthesizer; the lower triangle is discarded.
PortfolioDataset copula_synthesize(const std::vector<DevYearTable>& tables, const PortfolioDataset& like, Rng& rng,
                                   const SynthesisOptions& options = {});

/// Anchors drawn with replacement, separately within each side of the split.
/// One anchor choice applies to every company.
struct ResampledCorpus {
  std::vector<dt::Anchor> train_anchors;
  std::vector<dt::Anchor> validation_anchors;
  std::vector<dt::SequenceSample> train;
  std::vector<dt::SequenceSample> validation;
};

ResampledCorpus block_resample(const dt::Corpus& corpus, Rng& rng);
/// Replication k draws from stream_rng(seed, k).
std::vector<ResampledCorpus> block_bootstrap(const dt::Corpus& corpus, int replications, std::uint64_t seed);

enum class EdtGenerator { kCopulaSynth, kBlockBootstrap };
std::string_view to_string(EdtGenerator generator);
EdtGenerator parse_edt_generator(std::string_view text);

struct EdtConfig {
  EdtGenerator generator = EdtGenerator::kCopulaSynth;
  int replications = 1000;
  std::uint64_t seed = 1;
  bool warm_start = true;
  /// Fine-tune or cold-train settings. Its seed fixes the anchor split that the
  /// block bootstrap resamples; per-replication shuffles use derived seeds.
  dt::TrainConfig training;
};

struct EdtResult {
  std::vector<ReserveDistribution> companies;  ///< portfolio order
  int failures = 0;
  int projected_tables = 0;
};

/// Per replication: build a new corpus, fine-tune from `model` (or train from
/// scratch), then predict reserves. The synthesizer predicts its synthetic
/// triangles; the block bootstrap predicts the original portfolio. Diverged
/// replications are dropped and counted.
EdtResult edt_predictive_distribution(const dt::DtModel& model, const PortfolioDataset& data, const EdtConfig& config,
                                      const ParallelOptions& parallel = {});

}  // namespace lossres::resample
