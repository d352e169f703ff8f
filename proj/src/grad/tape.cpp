#include "lossres/grad/tape.hpp"

#include <sstream>

#include "lossres/error.hpp"
#include "lossres/grad/parameter_store.hpp"

namespace lossres::grad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kParam: return "param";
    case Op::kConst: return "const";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kAddRow: return "add_row";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kOneMinus: return "one_minus";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kConcatCols: return "concat_cols";
    case Op::kSliceCols: return "slice_cols";
    case Op::kGatherRows: return "gather_rows";
    case Op::kSelectRows: return "select_rows";
    case Op::kMaskedWeightedSse: return "masked_weighted_sse";
    case Op::kSum: return "sum";
  }
  return "?";
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols();
    throw DomainError(msg.str());
  }
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::param(const std::string& name) {
  if (store_ == nullptr) throw DomainError("param: tape has no parameter store");
  Node n{Op::kParam, {}, store_->value(name), {}};
  n.name = name;
  return push(std::move(n));
}

Var Tape::constant(Matrix value) { return push(Node{Op::kConst, {}, std::move(value), {}}); }

Var Tape::matmul(Var a, Var b) {
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  if (x.cols() != y.rows()) throw DomainError("matmul: inner dimensions differ");
  return push(Node{Op::kMatmul, {a.id, b.id}, x * y, {}});
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(Node{Op::kAdd, {a.id, b.id}, value(a) + value(b), {}});
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& x = value(a);
  const Matrix& r = value(row);
  if (r.rows() != 1 || r.cols() != x.cols()) throw DomainError("add_row: bias must be 1 x cols");
  Matrix out = x.rowwise() + r.row(0);
  return push(Node{Op::kAddRow, {a.id, row.id}, std::move(out), {}});
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(Node{Op::kSub, {a.id, b.id}, value(a) - value(b), {}});
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  return push(Node{Op::kMul, {a.id, b.id}, value(a).cwiseProduct(value(b)), {}});
}

Var Tape::scale(Var a, double factor) {
  Node n{Op::kScale, {a.id}, value(a) * factor, {}};
  n.factor = factor;
  return push(std::move(n));
}

Var Tape::one_minus(Var a) {
  return push(Node{Op::kOneMinus, {a.id}, (1.0 - value(a).array()).matrix(), {}});
}

Var Tape::sigmoid(Var a) {
  Matrix out = value(a).unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return push(Node{Op::kSigmoid, {a.id}, std::move(out), {}});
}

Var Tape::tanh(Var a) { return push(Node{Op::kTanh, {a.id}, value(a).array().tanh().matrix(), {}}); }

Var Tape::relu(Var a) { return push(Node{Op::kRelu, {a.id}, value(a).cwiseMax(0.0), {}}); }

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DomainError("concat_cols: no inputs");
  const Eigen::Index rows = value(parts.front()).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw DomainError("concat_cols: row counts differ");
    cols += value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  std::vector<std::int32_t> ids;
  for (Var p : parts) {
    out.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
    ids.push_back(p.id);
  }
  return push(Node{Op::kConcatCols, std::move(ids), std::move(out), {}});
}

Var Tape::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  const Matrix& x = value(a);
  if (start < 0 || count < 0 || start + count > x.cols()) throw DomainError("slice_cols: range out of bounds");
  Node n{Op::kSliceCols, {a.id}, x.middleCols(start, count), {}};
  n.start = start;
  return push(std::move(n));
}

Var Tape::gather_rows(Var table, std::vector<int> index) {
  const Matrix& t = value(table);
  Matrix out(static_cast<Eigen::Index>(index.size()), t.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= t.rows()) throw DomainError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(k)) = t.row(index[k]);
  }
  Node n{Op::kGatherRows, {table.id}, std::move(out), {}};
  n.index = std::move(index);
  return push(std::move(n));
}

Var Tape::select_rows(const std::vector<bool>& valid, Var when_valid, Var otherwise) {
  const Matrix& a = value(when_valid);
  const Matrix& b = value(otherwise);
  require_same_shape(a, b, "select_rows");
  if (static_cast<Eigen::Index>(valid.size()) != a.rows()) throw DomainError("select_rows: mask length differs");
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) out.row(r) = valid[static_cast<std::size_t>(r)] ? a.row(r) : b.row(r);
  Node n{Op::kSelectRows, {when_valid.id, otherwise.id}, std::move(out), {}};
  n.rows_valid = valid;
  return push(std::move(n));
}

Var Tape::masked_weighted_sse(Var pred, const MaskedMatrix& target, const Matrix& weight) {
  const Matrix& p = value(pred);
  require_same_shape(p, target.value, "masked_weighted_sse");
  require_same_shape(p, weight, "masked_weighted_sse");
  if (target.valid.rows() != p.rows() || target.valid.cols() != p.cols())
    throw DomainError("masked_weighted_sse: mask shape mismatch");
  double total = 0.0;
  for (Eigen::Index c = 0; c < p.cols(); ++c)
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      if (target.valid(r, c)) {
        const double e = p(r, c) - target.value(r, c);
        total += weight(r, c) * e * e;
      }
  Node n{Op::kMaskedWeightedSse, {pred.id}, Matrix::Constant(1, 1, total), {}};
  n.target = target;
  n.weight = weight;
  return push(std::move(n));
}

Var Tape::sum(Var a) { return push(Node{Op::kSum, {a.id}, Matrix::Constant(1, 1, value(a).sum()), {}}); }

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw DomainError("scalar: node is not 1 x 1");
  return m(0, 0);
}

void Tape::accumulate(std::int32_t id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

GradientMap Tape::backward(Var loss) {
  const Matrix& out = value(loss);
  if (out.rows() != 1 || out.cols() != 1) throw DomainError("backward: loss must be a 1 x 1 scalar node");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(loss.id)].grad = Matrix::Ones(1, 1);

  for (std::int32_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    if (!n.value.allFinite() || !n.grad.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite " << (n.value.allFinite() ? "gradient" : "value") << " at node " << id << " ("
          << op_name(n.op) << (n.name.empty() ? "" : " " + n.name) << ")";
      throw NumericError(msg.str());
    }
    const Matrix& g = n.grad;
    auto in_value = [&](std::size_t k) -> const Matrix& { return nodes_[static_cast<std::size_t>(n.in[k])].value; };
    switch (n.op) {
      case Op::kParam:
      case Op::kConst:
        break;
      case Op::kMatmul:
        accumulate(n.in[0], g * in_value(1).transpose());
        accumulate(n.in[1], in_value(0).transpose() * g);
        break;
      case Op::kAdd:
        accumulate(n.in[0], g);
        accumulate(n.in[1], g);
        break;
      case Op::kAddRow:
        accumulate(n.in[0], g);
        accumulate(n.in[1], g.colwise().sum());
        break;
      case Op::kSub:
        accumulate(n.in[0], g);
        accumulate(n.in[1], -g);
        break;
      case Op::kMul: {
        Matrix ga = g.cwiseProduct(in_value(1));
        Matrix gb = g.cwiseProduct(in_value(0));
        accumulate(n.in[0], ga);
        accumulate(n.in[1], gb);
        break;
      }
      case Op::kScale:
        accumulate(n.in[0], g * n.factor);
        break;
      case Op::kOneMinus:
        accumulate(n.in[0], -g);
        break;
      case Op::kSigmoid:
        accumulate(n.in[0], g.cwiseProduct((n.value.array() * (1.0 - n.value.array())).matrix()));
        break;
      case Op::kTanh:
        accumulate(n.in[0], g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case Op::kRelu:
        accumulate(n.in[0], (in_value(0).array() > 0.0).select(g.array(), 0.0).matrix());
        break;
      case Op::kConcatCols: {
        Eigen::Index at = 0;
        for (std::size_t k = 0; k < n.in.size(); ++k) {
          const Eigen::Index w = in_value(k).cols();
          accumulate(n.in[k], g.middleCols(at, w));
          at += w;
        }
        break;
      }
      case Op::kSliceCols: {
        const Matrix& x = in_value(0);
        Matrix gx = Matrix::Zero(x.rows(), x.cols());
        gx.middleCols(n.start, g.cols()) = g;
        accumulate(n.in[0], gx);
        break;
      }
      case Op::kGatherRows: {
        const Matrix& t = in_value(0);
        Matrix gt = Matrix::Zero(t.rows(), t.cols());
        for (std::size_t k = 0; k < n.index.size(); ++k) gt.row(n.index[k]) += g.row(static_cast<Eigen::Index>(k));
        accumulate(n.in[0], gt);
        break;
      }
      case Op::kSelectRows: {
        Matrix ga = Matrix::Zero(g.rows(), g.cols());
        Matrix gb = Matrix::Zero(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          if (n.rows_valid[static_cast<std::size_t>(r)])
            ga.row(r) = g.row(r);
          else
            gb.row(r) = g.row(r);
        }
        accumulate(n.in[0], ga);
        accumulate(n.in[1], gb);
        break;
      }
      case Op::kMaskedWeightedSse: {
        const Matrix& p = in_value(0);
        Matrix gp = Matrix::Zero(p.rows(), p.cols());
        const double s = g(0, 0);
        for (Eigen::Index c = 0; c < p.cols(); ++c)
          for (Eigen::Index r = 0; r < p.rows(); ++r)
            if (n.target.valid(r, c)) gp(r, c) = s * 2.0 * n.weight(r, c) * (p(r, c) - n.target.value(r, c));
        accumulate(n.in[0], gp);
        break;
      }
      case Op::kSum: {
        const Matrix& x = in_value(0);
        accumulate(n.in[0], Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
        break;
      }
    }
  }

  GradientMap grads;
  if (store_ != nullptr)
    for (const auto& [name, slot] : *store_) grads.emplace(name, Matrix::Zero(slot.value.rows(), slot.value.cols()));
  for (const auto& n : nodes_)
    if (n.op == Op::kParam && n.grad.size() != 0) grads[n.name] += n.grad;
  return grads;
}

Matrix Tape::gradient(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

}  // namespace lossres::grad
