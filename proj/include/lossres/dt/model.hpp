#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "lossres/dt/samples.hpp"
#include "lossres/grad/parameter_store.hpp"

namespace lossres::dt {

struct Architecture {
  int steps = 9;          ///< sequence length I - 1
  int companies = 1;
  int embedding = 0;      ///< C - 1
  int hidden = 128;       ///< GRU width
  int head_hidden = 64;

  bool operator==(const Architecture&) const = default;
  static Architecture for_data(int origins, int companies, int hidden = 128);
};

/// Fixed per-LOB affine map: inputs enter as (Y - mean) / scale and head outputs
/// leave as mean + scale * output. Not trained; set from the training targets.
struct Normalization {
  double mean[2] = {0.0, 0.0};
  double scale[2] = {1.0, 1.0};

  bool operator==(const Normalization&) const = default;
  /// Mean and population standard deviation of the valid target values.
  static Normalization from_samples(const std::vector<SequenceSample>& samples);
};

/// Learned weights plus the company list that fixes embedding rows.
struct DtModel {
  Architecture arch;
  std::vector<std::string> companies;
  grad::ParameterStore params;
  Normalization normalization;

  int company_index(const std::string& company) const;
};

/// He-initialized weights and zero biases.
DtModel init_model(const Architecture& arch, std::vector<std::string> companies, Rng& rng);

/// GRU weights for one recurrent layer. Matrices act on row vectors [h_prev, q].
struct GruWeights {
  grad::Var w_r, b_r, w_z, b_z, w_h, b_h;
};
GruWeights gru_weights(grad::Tape& tape, const std::string& prefix);

/// r = s([h, q] W_r + b_r), z = s([h, q] W_z + b_z),
/// h~ = tanh([r * h, q] W_h + b_h), h = z * h~ + (1 - z) * h_prev.
grad::Var gru_cell(grad::Tape& tape, const GruWeights& w, grad::Var h_prev, grad::Var q);

struct Prediction {
  grad::Var lob1;  ///< batch x steps
  grad::Var lob2;
};

/// Encoder over the valid input steps (masked steps leave the state untouched),
/// decoder unrolled for `steps` steps, two ReLU heads per decoder state.
Prediction forward(grad::Tape& tape, const DtModel& model, const std::vector<const SequenceSample*>& batch);

/// Forward pass without gradients; rows are samples, columns steps.
struct PredictedSequences {
  grad::Matrix lob1;
  grad::Matrix lob2;
};
PredictedSequences predict(const DtModel& model, const std::vector<SequenceSample>& samples);

enum class LossKind { kSymmetric, kAsymmetric };
std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);

/// Floor on the per-sequence target variance in the asymmetric loss.
inline constexpr double kVarianceFloor = 1e-6;

/// Per-entry weights so that the masked weighted SSE equals the batch mean of the
/// per-sample loss. Symmetric: 1 / (2 n). Asymmetric: 1 / (2 n sigma_l^2), with the
/// population variance of the sample's valid targets for LOB l.
std::pair<grad::Matrix, grad::Matrix> loss_weights(const std::vector<const SequenceSample*>& batch, LossKind kind);

/// Loss node for a batch.
grad::Var loss(grad::Tape& tape, const Prediction& pred, const std::vector<const SequenceSample*>& batch,
               LossKind kind);

/// Mean per-sample loss over a sample set, evaluated without gradients.
double evaluate_loss(const DtModel& model, const std::vector<SequenceSample>& samples, LossKind kind);

nlohmann::json checkpoint_json(const DtModel& model);
DtModel model_from_json(const nlohmann::json& j);
void save_checkpoint(const DtModel& model, const std::filesystem::path& path, const nlohmann::json& extra = {});
DtModel load_checkpoint(const std::filesystem::path& path);

}  // namespace lossres::dt
