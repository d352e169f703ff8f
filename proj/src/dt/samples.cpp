#include "lossres/dt/samples.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lossres/error.hpp"

namespace lossres::dt {

namespace {

grad::MaskedMatrix empty_sequence(int steps) {
  grad::MaskedMatrix m;
  m.value = grad::Matrix::Zero(steps, 2);
  m.valid = grad::BoolArray::Constant(steps, 2, false);
  return m;
}

SequenceSample make_sample(const PortfolioDataset& data, std::size_t company, Anchor anchor, int history) {
  const auto& pair = data[company];
  const int origins = data.origins();
  const int steps = origins - 1;
  const StandardizedTriangle y1(pair.lob1);
  const StandardizedTriangle y2(pair.lob2);

  SequenceSample s;
  s.company = pair.company();
  s.company_index = static_cast<int>(company);
  s.anchor = anchor;
  s.input = empty_sequence(steps);
  s.target = empty_sequence(steps);

  const int first = history > 0 ? std::max(1, anchor.j - history) : 1;
  for (int j = first; j < anchor.j; ++j) {
    const int row = steps - (anchor.j - j);
    s.input.value(row, 0) = y1.value(anchor.i, j);
    s.input.value(row, 1) = y2.value(anchor.i, j);
    s.input.valid.row(row).setConstant(true);
  }
  for (int j = anchor.j; j <= origins; ++j) {
    if (!y1.has(anchor.i, j) || !y2.has(anchor.i, j)) break;
    const int row = j - anchor.j;
    s.target.value(row, 0) = y1.value(anchor.i, j);
    s.target.value(row, 1) = y2.value(anchor.i, j);
    s.target.valid.row(row).setConstant(true);
  }
  return s;
}

}  // namespace

std::vector<Anchor> training_anchors(int origins) {
  std::vector<Anchor> out;
  for (int i = 1; i <= origins - 1; ++i)
    for (int j = 2; j <= origins + 1 - i; ++j) out.push_back({i, j});
  return out;
}

std::vector<SequenceSample> build_training_samples(const PortfolioDataset& data, int history) {
  if (data.empty()) throw DataError("build_training_samples: empty dataset");
  if (data.origins() < 3) throw DomainError("build_training_samples: need at least 3 accident years");
  if (history < 0) throw DomainError("build_training_samples: history must be non-negative");
  const auto anchors = training_anchors(data.origins());
  std::vector<SequenceSample> out;
  out.reserve(data.size() * anchors.size());
  const auto upper = data.upper();
  for (std::size_t c = 0; c < upper.size(); ++c)
    for (const auto& a : anchors) out.push_back(make_sample(upper, c, a, history));
  return out;
}

std::vector<SequenceSample> build_test_samples(const PortfolioDataset& data, int history) {
  if (data.empty()) throw DataError("build_test_samples: empty dataset");
  const int origins = data.origins();
  std::vector<SequenceSample> out;
  for (std::size_t c = 0; c < data.size(); ++c)
    for (int i = 2; i <= origins; ++i) out.push_back(make_sample(data, c, {i, origins + 2 - i}, history));
  return out;
}

AnchorSplit split_anchors(const std::vector<Anchor>& anchors, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("split_anchors: fraction must lie in (0, 1)");
  const auto n = anchors.size();
  const auto n_train = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw DomainError("split_anchors: one side of the split would be empty");
  std::vector<Anchor> shuffled(anchors);
  // Fisher-Yates with an explicit draw so the partition does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t k = n - 1; k > 0; --k) {
    const auto r = static_cast<std::size_t>(rng() % (k + 1));
    std::swap(shuffled[k], shuffled[r]);
  }
  AnchorSplit split;
  split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

std::vector<AnchorSplit> kfold_anchors(const std::vector<Anchor>& anchors, int folds, Rng& rng) {
  const auto n = anchors.size();
  if (folds < 2 || static_cast<std::size_t>(folds) > n)
    throw DomainError("kfold_anchors: need 2 <= folds <= number of anchors");
  std::vector<Anchor> shuffled(anchors);
  for (std::size_t k = n - 1; k > 0; --k) {
    const auto r = static_cast<std::size_t>(rng() % (k + 1));
    std::swap(shuffled[k], shuffled[r]);
  }
  std::vector<AnchorSplit> out(static_cast<std::size_t>(folds));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t f = 0; f < out.size(); ++f)
      (k % out.size() == f ? out[f].validation : out[f].train).push_back(shuffled[k]);
  for (auto& split : out) {
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
  }
  return out;
}

std::vector<SequenceSample> select(const std::vector<SequenceSample>& samples, const std::vector<Anchor>& anchors) {
  const std::set<Anchor> keep(anchors.begin(), anchors.end());
  std::vector<SequenceSample> out;
  for (const auto& s : samples)
    if (keep.contains(s.anchor)) out.push_back(s);
  return out;
}

}  // namespace lossres::dt
