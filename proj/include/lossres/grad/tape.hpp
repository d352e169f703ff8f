#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lossres::grad {

using Matrix = Eigen::MatrixXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using GradientMap = std::map<std::string, Matrix>;

/// Values with per-entry validity. Invalid entries never take part in arithmetic,
/// so whatever they hold (including NaN) cannot leak into a reduction.
struct MaskedMatrix {
  Matrix value;
  BoolArray valid;

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index valid_count() const { return valid.count(); }
};

class ParameterStore;

/// Handle to a node on a Tape.
struct Var {
  std::int32_t id = -1;
};

enum class Op : std::uint8_t {
  kParam,
  kConst,
  kMatmul,
  kAdd,
  kAddRow,
  kSub,
  kMul,
  kScale,
  kOneMinus,
  kSigmoid,
  kTanh,
  kRelu,
  kConcatCols,
  kSliceCols,
  kGatherRows,
  kSelectRows,
  kMaskedWeightedSse,
  kSum,
};

std::string_view op_name(Op op);

/// Reverse-mode recorder over dense matrices. Nodes are appended in evaluation
/// order, which is a topological order, so backward() walks them in reverse.
class Tape {
 public:
  explicit Tape(const ParameterStore* store = nullptr) : store_(store) {}

  Var param(const std::string& name);
  Var constant(Matrix value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// a (n x m) + row (1 x m) broadcast over rows.
  Var add_row(Var a, Var row);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var one_minus(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
  /// Row k of the result is row index[k] of `table` (embedding lookup).
  Var gather_rows(Var table, std::vector<int> index);
  /// Row k is taken from `when_valid` where valid[k], else from `otherwise`.
  Var select_rows(const std::vector<bool>& valid, Var when_valid, Var otherwise);
  /// sum over valid (r,c) of weight(r,c) * (pred(r,c) - target(r,c))^2; 1 x 1.
  Var masked_weighted_sse(Var pred, const MaskedMatrix& target, const Matrix& weight);
  Var sum(Var a);

  const Matrix& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  Op op(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).op; }

  /// d loss / d p for every parameter in the store; unreachable parameters get zeros.
  /// Throws DomainError for a non-scalar loss and NumericError (naming the node)
  /// when a non-finite value or gradient is met.
  GradientMap backward(Var loss);
  /// Gradient with respect to an arbitrary node after backward(); zero when unreached.
  Matrix gradient(Var v) const;

 private:
  struct Node {
    Node(Op o, std::vector<std::int32_t> inputs, Matrix v, Matrix g = {})
        : op(o), in(std::move(inputs)), value(std::move(v)), grad(std::move(g)) {}

    Op op;
    std::vector<std::int32_t> in;
    Matrix value;
    Matrix grad;
    double factor = 0.0;
    Eigen::Index start = 0;
    std::vector<int> index;
    std::vector<bool> rows_valid;
    MaskedMatrix target;
    Matrix weight;
    std::string name;
  };

  Var push(Node node);
  const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }
  void accumulate(std::int32_t id, const Matrix& g);

  const ParameterStore* store_;
  std::vector<Node> nodes_;
};

}  // namespace lossres::grad
