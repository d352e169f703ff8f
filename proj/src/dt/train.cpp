#include "lossres/dt/train.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lossres/error.hpp"
#include "lossres/grad/amsgrad.hpp"

namespace lossres::dt {

void TrainConfig::validate() const {
  if (max_epochs < 1) throw DomainError("train config: max_epochs must be positive");
  if (patience < 1) throw DomainError("train config: patience must be at least 1");
  if (patience > max_epochs) throw DomainError("train config: patience exceeds max_epochs");
  if (!(split > 0.0 && split < 1.0)) throw DomainError("train config: split must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw DomainError("train config: learning rate must be positive");
  if (batch_size < 1) throw DomainError("train config: batch size must be positive");
  if (hidden < 1) throw DomainError("train config: hidden width must be positive");
  if (history < 0) throw DomainError("train config: history must be non-negative");
}

nlohmann::json to_json(const TrainConfig& c) {
  return nlohmann::json{{"max_epochs", c.max_epochs},
                        {"patience", c.patience},
                        {"split", c.split},
                        {"loss", std::string(to_string(c.loss))},
                        {"learning_rate", c.learning_rate},
                        {"batch_size", c.batch_size},
                        {"seed", c.seed},
                        {"hidden", c.hidden},
                        {"history", c.history}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.split = j.value("split", c.split);
  c.loss = parse_loss_kind(j.value("loss", std::string(to_string(c.loss))));
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.hidden = j.value("hidden", c.hidden);
  c.history = j.value("history", c.history);
  c.validate();
  return c;
}

void assign_companies(std::vector<SequenceSample>& samples, const DtModel& model) {
  for (auto& s : samples) s.company_index = model.company_index(s.company);
}

TrainResult train(DtModel model, const std::vector<SequenceSample>& train_set,
                  const std::vector<SequenceSample>& validation_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty() || validation_set.empty()) throw DomainError("train: empty training or validation set");

  grad::AmsGradConfig opt;
  opt.learning_rate = config.learning_rate;
  Rng rng = stream_rng(config.seed, 0x7472616eULL);

  TrainResult result;
  auto snapshot = [&](const grad::ParameterStore& store) {
    std::map<std::string, grad::Matrix> values;
    for (const auto& [name, slot] : store) values[name] = slot.value;
    return values;
  };

  double best = evaluate_loss(model, validation_set, config.loss);
  if (!std::isfinite(best)) throw NumericError("train: non-finite validation loss at epoch 0");
  auto best_values = snapshot(model.params);
  result.history.push_back({0, std::numeric_limits<double>::quiet_NaN(), best});

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t k = order.size() - 1; k > 0; --k) std::swap(order[k], order[rng() % (k + 1)]);
    double train_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::vector<const SequenceSample*> members;
      for (std::size_t k = start; k < stop; ++k) members.push_back(&train_set[order[k]]);
      grad::Tape tape(&model.params);
      const auto pred = forward(tape, model, members);
      const auto l = loss(tape, pred, members, config.loss);
      const double value = tape.scalar(l);
      if (!std::isfinite(value)) throw NumericError("train: non-finite training loss at epoch " + std::to_string(epoch));
      try {
        grad::amsgrad_step(model.params, tape.backward(l), opt);
      } catch (const NumericError& e) {
        throw NumericError("train: epoch " + std::to_string(epoch) + ": " + e.what());
      }
      train_sum += value * static_cast<double>(stop - start);
    }
    const double validation = evaluate_loss(model, validation_set, config.loss);
    if (!std::isfinite(validation))
      throw NumericError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, train_sum / static_cast<double>(order.size()), validation});
    result.epochs_run = epoch;
    if (validation < best) {
      best = validation;
      best_values = snapshot(model.params);
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  for (auto& [name, value] : best_values) model.params.value(name) = value;
  result.model = std::move(model);
  result.best_validation_loss = best;
  return result;
}

Corpus build_corpus(const PortfolioDataset& data, const TrainConfig& config) {
  config.validate();
  Corpus corpus;
  const auto samples = build_training_samples(data, config.history);
  Rng rng = stream_rng(config.seed, 0x73706c6974ULL);
  corpus.split = split_anchors(training_anchors(data.origins()), config.split, rng);
  corpus.train = select(samples, corpus.split.train);
  corpus.validation = select(samples, corpus.split.validation);
  return corpus;
}

TrainResult fit_dt(const PortfolioDataset& data, const TrainConfig& config) {
  const auto corpus = build_corpus(data, config);
  std::vector<std::string> companies;
  for (const auto& pair : data) companies.push_back(pair.company());
  Rng rng = stream_rng(config.seed, 0x696e6974ULL);
  auto model = init_model(Architecture::for_data(data.origins(), static_cast<int>(data.size()), config.hidden),
                          std::move(companies), rng);
  model.normalization = Normalization::from_samples(corpus.train);
  return train(std::move(model), corpus.train, corpus.validation, config);
}

TrainResult fine_tune(const DtModel& model, const std::vector<SequenceSample>& train_set,
                      const std::vector<SequenceSample>& validation_set, const TrainConfig& config) {
  DtModel start = model;
  start.params.reset_optimizer_state();
  auto t = train_set;
  auto v = validation_set;
  assign_companies(t, start);
  assign_companies(v, start);
  return train(std::move(start), t, v, config);
}

TrainResult fine_tune(const DtModel& model, const PortfolioDataset& data, const TrainConfig& config) {
  if (data.origins() - 1 != model.arch.steps) throw DomainError("fine_tune: sequence length differs from the model");
  const auto corpus = build_corpus(data, config);
  return fine_tune(model, corpus.train, corpus.validation, config);
}

std::vector<CompanyReserves> predict_reserves(const DtModel& model, const PortfolioDataset& data, int history) {
  const int origins = data.origins();
  if (origins - 1 != model.arch.steps) throw DomainError("predict_reserves: sequence length differs from the model");
  auto samples = build_test_samples(data, history);
  assign_companies(samples, model);
  const auto pred = predict(model, samples);

  std::vector<CompanyReserves> out;
  std::size_t row = 0;
  for (const auto& pair : data) {
    CellMap c1 = pair.lob1.upper().cells();
    CellMap c2 = pair.lob2.upper().cells();
    double r1 = 0.0, r2 = 0.0;
    for (int i = 2; i <= origins; ++i, ++row) {
      const int anchor_j = origins + 2 - i;
      for (int j = anchor_j; j <= origins; ++j) {
        const auto s = static_cast<Eigen::Index>(j - anchor_j);
        const double y1 = pred.lob1(static_cast<Eigen::Index>(row), s);
        const double y2 = pred.lob2(static_cast<Eigen::Index>(row), s);
        c1[{i, j}] = y1 * pair.lob1.premium(i);
        c2[{i, j}] = y2 * pair.lob2.premium(i);
        r1 += y1 * pair.lob1.premium(i);
        r2 += y2 * pair.lob2.premium(i);
      }
    }
    const auto& p1 = pair.lob1.premiums();
    const auto& p2 = pair.lob2.premiums();
    TrianglePair completed{LossTriangle(pair.company(), Lob::kLob1, std::vector<double>(p1.begin(), p1.end()), c1,
                                        pair.lob1.origin_labels()),
                           LossTriangle(pair.company(), Lob::kLob2, std::vector<double>(p2.begin(), p2.end()), c2,
                                        pair.lob2.origin_labels())};
    out.push_back({pair.company(), Reserves::of(r1, r2), std::move(completed)});
  }
  return out;
}

}  // namespace lossres::dt
