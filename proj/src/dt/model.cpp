#include "lossres/dt/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lossres/error.hpp"
#include "lossres/grad/amsgrad.hpp"

namespace lossres::dt {

using grad::Matrix;
using grad::Tape;
using grad::Var;

Architecture Architecture::for_data(int origins, int companies, int hidden) {
  if (origins < 2) throw DomainError("architecture: need at least 2 accident years");
  if (companies < 1) throw DomainError("architecture: need at least one company");
  if (hidden < 1) throw DomainError("architecture: hidden width must be positive");
  return Architecture{origins - 1, companies, companies - 1, hidden, 64};
}

Normalization Normalization::from_samples(const std::vector<SequenceSample>& samples) {
  Normalization n;
  for (int lob = 0; lob < 2; ++lob) {
    double sum = 0.0, sq = 0.0, count = 0.0;
    for (const auto& s : samples)
      for (Eigen::Index k = 0; k < s.target.rows(); ++k)
        if (s.target.valid(k, lob)) {
          sum += s.target.value(k, lob);
          count += 1.0;
        }
    if (count == 0.0) continue;
    const double mean = sum / count;
    for (const auto& s : samples)
      for (Eigen::Index k = 0; k < s.target.rows(); ++k)
        if (s.target.valid(k, lob)) sq += (s.target.value(k, lob) - mean) * (s.target.value(k, lob) - mean);
    const double sd = std::sqrt(sq / count);
    n.mean[lob] = mean;
    n.scale[lob] = sd > 0.0 ? sd : 1.0;
  }
  return n;
}

int DtModel::company_index(const std::string& company) const {
  const auto it = std::find(companies.begin(), companies.end(), company);
  if (it == companies.end()) throw DataError("unknown company '" + company + "'");
  return static_cast<int>(it - companies.begin());
}

namespace {

void add_gru(grad::ParameterStore& store, const std::string& prefix, int input, int hidden, Rng& rng) {
  const int fan_in = hidden + input;
  for (const char* gate : {"r", "z", "h"}) {
    store.add(prefix + ".W_" + gate, grad::he_init(fan_in, hidden, fan_in, rng));
    store.add(prefix + ".b_" + gate, Matrix::Zero(1, hidden));
  }
}

void add_head(grad::ParameterStore& store, const std::string& prefix, int hidden, int head_hidden, Rng& rng) {
  store.add(prefix + ".W1", grad::he_init(hidden, head_hidden, hidden, rng));
  store.add(prefix + ".b1", Matrix::Zero(1, head_hidden));
  store.add(prefix + ".W2", grad::he_init(head_hidden, 1, head_hidden, rng));
  store.add(prefix + ".b2", Matrix::Zero(1, 1));
}

Var head(Tape& tape, const std::string& prefix, Var h) {
  const Var hidden = tape.relu(tape.add_row(tape.matmul(h, tape.param(prefix + ".W1")), tape.param(prefix + ".b1")));
  return tape.add_row(tape.matmul(hidden, tape.param(prefix + ".W2")), tape.param(prefix + ".b2"));
}

// mean + scale * column, applied to a batch x steps prediction.
Var denormalize(Tape& tape, Var v, double mean, double scale) {
  const Var scaled = scale == 1.0 ? v : tape.scale(v, scale);
  if (mean == 0.0) return scaled;
  return tape.add_row(scaled, tape.constant(Matrix::Constant(1, tape.value(v).cols(), mean)));
}

grad::MaskedMatrix batch_target(const std::vector<const SequenceSample*>& batch, int lob, int steps) {
  grad::MaskedMatrix m;
  m.value = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), steps);
  m.valid = grad::BoolArray::Constant(m.value.rows(), steps, false);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& t = batch[b]->target;
    for (int s = 0; s < steps; ++s) {
      if (!t.valid(s, lob)) continue;
      m.value(static_cast<Eigen::Index>(b), s) = t.value(s, lob);
      m.valid(static_cast<Eigen::Index>(b), s) = true;
    }
  }
  return m;
}

void check_sample(const DtModel& model, const SequenceSample& s) {
  if (s.company_index < 0 || s.company_index >= model.arch.companies)
    throw DataError("unknown company '" + s.company + "'");
  if (s.input.rows() != model.arch.steps || s.target.rows() != model.arch.steps)
    throw DomainError("sample length does not match the model");
}

}  // namespace

DtModel init_model(const Architecture& arch, std::vector<std::string> companies, Rng& rng) {
  if (static_cast<int>(companies.size()) != arch.companies)
    throw DomainError("init_model: company list does not match the architecture");
  DtModel model{arch, std::move(companies), {}, {}};
  auto& store = model.params;
  if (arch.embedding > 0) store.add("embedding", grad::he_init(arch.companies, arch.embedding, arch.companies, rng));
  add_gru(store, "encoder", 2 + arch.embedding, arch.hidden, rng);
  add_gru(store, "decoder", arch.hidden, arch.hidden, rng);
  add_head(store, "head1", arch.hidden, arch.head_hidden, rng);
  add_head(store, "head2", arch.hidden, arch.head_hidden, rng);
  return model;
}

GruWeights gru_weights(Tape& tape, const std::string& prefix) {
  return GruWeights{tape.param(prefix + ".W_r"), tape.param(prefix + ".b_r"), tape.param(prefix + ".W_z"),
                    tape.param(prefix + ".b_z"), tape.param(prefix + ".W_h"), tape.param(prefix + ".b_h")};
}

Var gru_cell(Tape& tape, const GruWeights& w, Var h_prev, Var q) {
  const Var hq = tape.concat_cols({h_prev, q});
  const Var r = tape.sigmoid(tape.add_row(tape.matmul(hq, w.w_r), w.b_r));
  const Var z = tape.sigmoid(tape.add_row(tape.matmul(hq, w.w_z), w.b_z));
  const Var candidate_in = tape.concat_cols({tape.mul(r, h_prev), q});
  const Var candidate = tape.tanh(tape.add_row(tape.matmul(candidate_in, w.w_h), w.b_h));
  return tape.add(tape.mul(z, candidate), tape.mul(tape.one_minus(z), h_prev));
}

Prediction forward(Tape& tape, const DtModel& model, const std::vector<const SequenceSample*>& batch) {
  if (batch.empty()) throw DomainError("forward: empty batch");
  const auto& arch = model.arch;
  const auto rows = static_cast<Eigen::Index>(batch.size());
  std::vector<int> company(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    check_sample(model, *batch[b]);
    company[b] = batch[b]->company_index;
  }

  const GruWeights enc = gru_weights(tape, "encoder");
  const GruWeights dec = gru_weights(tape, "decoder");
  Var embedded{};
  if (arch.embedding > 0) embedded = tape.gather_rows(tape.param("embedding"), company);

  Var h = tape.constant(Matrix::Zero(rows, arch.hidden));
  for (int s = 0; s < arch.steps; ++s) {
    std::vector<bool> valid(batch.size());
    Matrix x = Matrix::Zero(rows, 2);
    bool any = false;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& in = batch[b]->input;
      valid[b] = in.valid(s, 0) && in.valid(s, 1);
      if (!valid[b]) continue;
      any = true;
      for (int lob = 0; lob < 2; ++lob)
        x(static_cast<Eigen::Index>(b), lob) =
            (in.value(s, lob) - model.normalization.mean[lob]) / model.normalization.scale[lob];
    }
    if (!any) continue;
    const Var xs = tape.constant(std::move(x));
    const Var q = arch.embedding > 0 ? tape.concat_cols({xs, embedded}) : xs;
    h = tape.select_rows(valid, gru_cell(tape, enc, h, q), h);
  }

  std::vector<Var> out1, out2;
  for (int s = 0; s < arch.steps; ++s) {
    h = gru_cell(tape, dec, h, h);
    out1.push_back(head(tape, "head1", h));
    out2.push_back(head(tape, "head2", h));
  }
  const auto& n = model.normalization;
  return Prediction{denormalize(tape, tape.concat_cols(out1), n.mean[0], n.scale[0]),
                    denormalize(tape, tape.concat_cols(out2), n.mean[1], n.scale[1])};
}

PredictedSequences predict(const DtModel& model, const std::vector<SequenceSample>& samples) {
  PredictedSequences out{Matrix(static_cast<Eigen::Index>(samples.size()), model.arch.steps),
                         Matrix(static_cast<Eigen::Index>(samples.size()), model.arch.steps)};
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t stop = std::min(samples.size(), start + kChunk);
    std::vector<const SequenceSample*> batch;
    for (std::size_t k = start; k < stop; ++k) batch.push_back(&samples[k]);
    Tape tape(&model.params);
    const auto p = forward(tape, model, batch);
    const auto n = static_cast<Eigen::Index>(stop - start);
    out.lob1.middleRows(static_cast<Eigen::Index>(start), n) = tape.value(p.lob1);
    out.lob2.middleRows(static_cast<Eigen::Index>(start), n) = tape.value(p.lob2);
  }
  return out;
}

std::string_view to_string(LossKind kind) { return kind == LossKind::kSymmetric ? "symmetric" : "asymmetric"; }

LossKind parse_loss_kind(std::string_view text) {
  if (text == "symmetric") return LossKind::kSymmetric;
  if (text == "asymmetric") return LossKind::kAsymmetric;
  throw DomainError("unknown loss kind '" + std::string(text) + "'");
}

std::pair<Matrix, Matrix> loss_weights(const std::vector<const SequenceSample*>& batch, LossKind kind) {
  if (batch.empty()) throw DomainError("loss: empty batch");
  const auto steps = batch.front()->target.rows();
  const auto rows = static_cast<Eigen::Index>(batch.size());
  Matrix w1 = Matrix::Zero(rows, steps);
  Matrix w2 = Matrix::Zero(rows, steps);
  for (Eigen::Index b = 0; b < rows; ++b) {
    const auto& t = batch[static_cast<std::size_t>(b)]->target;
    const auto n = static_cast<double>((t.valid.col(0) && t.valid.col(1)).count());
    if (n == 0.0) throw DomainError("loss: sample has no valid target step");
    double scale[2] = {1.0, 1.0};
    if (kind == LossKind::kAsymmetric) {
      for (int lob = 0; lob < 2; ++lob) {
        double sum = 0.0, sq = 0.0;
        for (Eigen::Index s = 0; s < steps; ++s)
          if (t.valid(s, lob)) sum += t.value(s, lob);
        const double mean = sum / n;
        for (Eigen::Index s = 0; s < steps; ++s)
          if (t.valid(s, lob)) sq += (t.value(s, lob) - mean) * (t.value(s, lob) - mean);
        scale[lob] = 1.0 / std::max(sq / n, kVarianceFloor);
      }
    }
    const double base = 1.0 / (2.0 * n * static_cast<double>(rows));
    for (Eigen::Index s = 0; s < steps; ++s) {
      if (t.valid(s, 0)) w1(b, s) = base * scale[0];
      if (t.valid(s, 1)) w2(b, s) = base * scale[1];
    }
  }
  return {std::move(w1), std::move(w2)};
}

Var loss(Tape& tape, const Prediction& pred, const std::vector<const SequenceSample*>& batch, LossKind kind) {
  const auto [w1, w2] = loss_weights(batch, kind);
  const auto steps = static_cast<int>(tape.value(pred.lob1).cols());
  return tape.add(tape.masked_weighted_sse(pred.lob1, batch_target(batch, 0, steps), w1),
                  tape.masked_weighted_sse(pred.lob2, batch_target(batch, 1, steps), w2));
}

double evaluate_loss(const DtModel& model, const std::vector<SequenceSample>& samples, LossKind kind) {
  if (samples.empty()) throw DomainError("evaluate_loss: no samples");
  double total = 0.0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t stop = std::min(samples.size(), start + kChunk);
    std::vector<const SequenceSample*> batch;
    for (std::size_t k = start; k < stop; ++k) batch.push_back(&samples[k]);
    Tape tape(&model.params);
    const auto p = forward(tape, model, batch);
    // Chunk losses are chunk means; reweight to the overall mean.
    total += tape.scalar(loss(tape, p, batch, kind)) * static_cast<double>(stop - start);
  }
  return total / static_cast<double>(samples.size());
}

nlohmann::json checkpoint_json(const DtModel& model) {
  const auto& a = model.arch;
  return nlohmann::json{{"format", "lossres-dt"},
                        {"version", 1},
                        {"architecture",
                         {{"steps", a.steps},
                          {"companies", a.companies},
                          {"embedding", a.embedding},
                          {"hidden", a.hidden},
                          {"head_hidden", a.head_hidden}}},
                        {"company_ids", model.companies},
                        {"normalization",
                         {{"mean", {model.normalization.mean[0], model.normalization.mean[1]}},
                          {"scale", {model.normalization.scale[0], model.normalization.scale[1]}}}},
                        {"parameters", model.params.to_json()}};
}

DtModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "lossres-dt") throw DataError("checkpoint: not a model file");
  if (j.value("version", 0) != 1) throw DataError("checkpoint: unsupported version");
  const auto& a = j.at("architecture");
  DtModel model;
  model.arch = Architecture{a.at("steps").get<int>(), a.at("companies").get<int>(), a.at("embedding").get<int>(),
                            a.at("hidden").get<int>(), a.at("head_hidden").get<int>()};
  model.companies = j.at("company_ids").get<std::vector<std::string>>();
  model.params = grad::ParameterStore::from_json(j.at("parameters"));
  if (j.contains("normalization")) {
    const auto& n = j.at("normalization");
    for (int lob = 0; lob < 2; ++lob) {
      model.normalization.mean[lob] = n.at("mean").at(static_cast<std::size_t>(lob)).get<double>();
      model.normalization.scale[lob] = n.at("scale").at(static_cast<std::size_t>(lob)).get<double>();
    }
  }
  if (static_cast<int>(model.companies.size()) != model.arch.companies)
    throw DataError("checkpoint: company list does not match the architecture");
  return model;
}

void save_checkpoint(const DtModel& model, const std::filesystem::path& path, const nlohmann::json& extra) {
  auto j = checkpoint_json(model);
  if (!extra.is_null()) j["metadata"] = extra;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
}

DtModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace lossres::dt
