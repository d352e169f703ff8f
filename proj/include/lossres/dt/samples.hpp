#pragma once

#include <string>
#include <vector>

#include "lossres/grad/tape.hpp"
#include "lossres/rng.hpp"
#include "lossres/triangle.hpp"

namespace lossres::dt {

/// (accident year, development year) at which a sample's target starts.
struct Anchor {
  int i = 0;
  int j = 0;
  auto operator<=>(const Anchor&) const = default;
};

/// Paired-LOB sequences of length I-1 around one anchor. Columns are LOB1, LOB2.
/// The input holds Y_{i,1..j-1} right-aligned; the target holds the observed
/// Y_{i,j..} left-aligned. Everything else is masked.
struct SequenceSample {
  std::string company;
  int company_index = 0;
  Anchor anchor;
  grad::MaskedMatrix input;
  grad::MaskedMatrix target;
};

/// Training anchors {(i, j): 1 <= i <= I-1, 2 <= j <= I+1-i}, ordered by i then j.
std::vector<Anchor> training_anchors(int origins);

/// One sample per company and training anchor. `history` caps the number of
/// valid input steps (the most recent ones are kept); 0 means no cap.
std::vector<SequenceSample> build_training_samples(const PortfolioDataset& data, int history = 0);

/// Prediction inputs on the latest diagonal, anchors (i, I+2-i) for 2 <= i <= I.
/// Targets are fully masked unless the data holds full squares.
std::vector<SequenceSample> build_test_samples(const PortfolioDataset& data, int history = 0);

struct AnchorSplit {
  std::vector<Anchor> train;
  std::vector<Anchor> validation;
};

/// Random partition of the anchors with round(fraction * n) on the training side.
/// The same partition applies to every company.
AnchorSplit split_anchors(const std::vector<Anchor>& anchors, double fraction, Rng& rng);

/// K-fold partition: fold f validates on every folds-th shuffled anchor and
/// trains on the rest, so each anchor is validated exactly once.
std::vector<AnchorSplit> kfold_anchors(const std::vector<Anchor>& anchors, int folds, Rng& rng);

/// Samples whose anchor lies in `anchors`, preserving sample order.
std::vector<SequenceSample> select(const std::vector<SequenceSample>& samples, const std::vector<Anchor>& anchors);

}  // namespace lossres::dt
