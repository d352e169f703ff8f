#pragma once

#include <cstdint>
#include <json.hpp>
#include <vector>

#include "lossres/dt/model.hpp"

namespace lossres::dt {

struct TrainConfig {
  int max_epochs = 1000;
  int patience = 100;
  double split = 0.8;
  LossKind loss = LossKind::kAsymmetric;
  double learning_rate = 5e-4;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int hidden = 128;
  int history = 0;  ///< cap on input steps, 0 for the full I - 1

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  int epoch = 0;               ///< 0 is the untrained starting point
  double train_loss = 0.0;     ///< mean minibatch loss over the epoch
  double validation_loss = 0.0;
};

struct TrainResult {
  DtModel model;  ///< weights from the epoch with the lowest validation loss
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_validation_loss = 0.0;
  int epochs_run = 0;
};

/// Rewrites each sample's company_index to the model's embedding row.
void assign_companies(std::vector<SequenceSample>& samples, const DtModel& model);

/// Minibatch AMSGRAD with early stopping on the validation loss. Throws
/// NumericError naming the epoch when the loss or a gradient turns non-finite.
TrainResult train(DtModel model, const std::vector<SequenceSample>& train_set,
                  const std::vector<SequenceSample>& validation_set, const TrainConfig& config);

/// Training and validation sets for a portfolio, split by anchor with config.seed.
struct Corpus {
  std::vector<SequenceSample> train;
  std::vector<SequenceSample> validation;
  AnchorSplit split;
};
Corpus build_corpus(const PortfolioDataset& data, const TrainConfig& config);

/// Build the corpus, initialize from config.seed, and train.
TrainResult fit_dt(const PortfolioDataset& data, const TrainConfig& config);

/// Resume from `model` with fresh optimizer state on a new corpus.
TrainResult fine_tune(const DtModel& model, const std::vector<SequenceSample>& train_set,
                      const std::vector<SequenceSample>& validation_set, const TrainConfig& config);
TrainResult fine_tune(const DtModel& model, const PortfolioDataset& data, const TrainConfig& config);

struct CompanyReserves {
  std::string company;
  Reserves reserves;
  TrianglePair completed;  ///< upper triangle as given, lower triangle predicted
};

/// Lower-triangle predictions from the latest diagonal of every company.
std::vector<CompanyReserves> predict_reserves(const DtModel& model, const PortfolioDataset& data, int history = 0);

}  // namespace lossres::dt
