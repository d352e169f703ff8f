#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lossres/dt/model.hpp"
#include "lossres/dt/train.hpp"
#include "lossres/error.hpp"
#include "lossres/sim/generate.hpp"
#include "lossres/triangle_io.hpp"
#include "support/dt_gradcheck.hpp"

using namespace lossres;
using namespace lossres::dt;
using grad::Matrix;

namespace {

const PortfolioDataset& appendix() {
  static const PortfolioDataset data =
      parse_triangle_csv(std::filesystem::path(LOSSRES_DATA_DIR) / "appendix_wide.csv", CsvSchema::kWide);
  return data;
}

DtModel small_model(const PortfolioDataset& data, int hidden, std::uint64_t seed) {
  std::vector<std::string> names;
  for (const auto& p : data) names.push_back(p.company());
  Rng rng(seed);
  return init_model(Architecture::for_data(data.origins(), static_cast<int>(data.size()), hidden), names, rng);
}

std::vector<const SequenceSample*> pointers(const std::vector<SequenceSample>& s) {
  std::vector<const SequenceSample*> out;
  for (const auto& x : s) out.push_back(&x);
  return out;
}

double batch_loss(const DtModel& model, const std::vector<SequenceSample>& samples, LossKind kind) {
  grad::Tape tape(&model.params);
  const auto b = pointers(samples);
  return tape.scalar(loss(tape, forward(tape, model, b), b, kind));
}

// A one-step sample whose target and errors are set by hand.
SequenceSample hand_sample(int steps, const std::vector<std::pair<double, double>>& target) {
  SequenceSample s;
  s.company = "co0";
  s.anchor = {1, 2};
  s.input.value = Matrix::Zero(steps, 2);
  s.input.valid = grad::BoolArray::Constant(steps, 2, false);
  s.input.value.row(steps - 1) << 0.3, 0.1;
  s.input.valid.row(steps - 1).setConstant(true);
  s.target.value = Matrix::Zero(steps, 2);
  s.target.valid = grad::BoolArray::Constant(steps, 2, false);
  for (std::size_t k = 0; k < target.size(); ++k) {
    s.target.value(static_cast<Eigen::Index>(k), 0) = target[k].first;
    s.target.value(static_cast<Eigen::Index>(k), 1) = target[k].second;
    s.target.valid.row(static_cast<Eigen::Index>(k)).setConstant(true);
  }
  return s;
}

// Loss of a fixed prediction against one sample, through the tape primitives.
double loss_of(const Matrix& p1, const Matrix& p2, const SequenceSample& s, LossKind kind) {
  grad::Tape tape;
  const std::vector<const SequenceSample*> b{&s};
  return tape.scalar(loss(tape, Prediction{tape.constant(p1), tape.constant(p2)}, b, kind));
}

}  // namespace

TEST_CASE("training samples follow the anchor index rule") {
  const auto samples = build_training_samples(appendix());
  CHECK(samples.size() == 45);
  CHECK(training_anchors(3) == std::vector<Anchor>{{1, 2}, {1, 3}, {2, 2}});
  const auto& first = samples.front();
  CHECK(first.anchor == Anchor{1, 2});
  CHECK(first.input.valid.col(0).count() == 1);
  CHECK(first.target.valid.col(0).count() == 9);
  CHECK(first.input.valid(8, 0));
  CHECK(first.target.valid(0, 0));

  for (const auto& s : samples) {
    const int i = s.anchor.i, j = s.anchor.j;
    // Input right-aligned with Y_{i,1..j-1}, target left-aligned with Y_{i,j..I+1-i}.
    CHECK(s.input.valid.col(0).count() == j - 1);
    CHECK(s.target.valid.col(0).count() == 10 + 1 - i - j + 1);
    const double y = appendix()[0].lob1.value(i, j - 1) / appendix()[0].lob1.premium(i);
    CHECK(s.input.value(8, 0) == y);
    CHECK(s.target.value(0, 1) == appendix()[0].lob2.value(i, j) / appendix()[0].lob2.premium(i));
  }

  CHECK_THROWS_AS(build_training_samples(testing::random_portfolio(2, 1, *std::make_unique<std::mt19937_64>(1))),
                  DomainError);
}

TEST_CASE("history caps keep the most recent input steps") {
  const auto capped = build_training_samples(appendix(), 3);
  for (const auto& s : capped) CHECK(s.input.valid.col(0).count() == std::min(3, s.anchor.j - 1));
}

TEST_CASE("anchor split is shared, sized and deterministic") {
  const auto anchors = training_anchors(10);
  Rng a(5), b(5);
  const auto s1 = split_anchors(anchors, 0.8, a);
  const auto s2 = split_anchors(anchors, 0.8, b);
  CHECK(s1.train.size() == 36);
  CHECK(s1.validation.size() == 9);
  CHECK(s1.train == s2.train);
  std::vector<Anchor> all(s1.train);
  all.insert(all.end(), s1.validation.begin(), s1.validation.end());
  std::sort(all.begin(), all.end());
  CHECK(all == anchors);

  Rng c(6);
  const auto two = split_anchors({{1, 2}, {1, 3}}, 0.5, c);
  CHECK(two.train.size() == 1);
  CHECK(two.validation.size() == 1);
  CHECK_THROWS_AS(split_anchors({{1, 2}}, 0.5, c), DomainError);
  CHECK_THROWS_AS(split_anchors(anchors, 1.0, c), DomainError);

  // Same anchors for every company.
  std::mt19937_64 rng(3);
  const auto data = testing::random_portfolio(6, 3, rng);
  TrainConfig config;
  const auto corpus = build_corpus(data, config);
  for (const auto& s : corpus.validation)
    CHECK(std::find(corpus.split.validation.begin(), corpus.split.validation.end(), s.anchor) !=
          corpus.split.validation.end());
  CHECK(corpus.validation.size() == 3 * corpus.split.validation.size());
}

TEST_CASE("k-fold splits validate every anchor once") {
  const auto anchors = training_anchors(10);
  Rng a(2);
  const auto folds = kfold_anchors(anchors, 5, a);
  REQUIRE(folds.size() == 5);
  std::vector<Anchor> validated;
  for (const auto& f : folds) {
    CHECK(f.validation.size() == 9);
    CHECK(f.train.size() == 36);
    for (const auto& v : f.validation) CHECK(std::find(f.train.begin(), f.train.end(), v) == f.train.end());
    validated.insert(validated.end(), f.validation.begin(), f.validation.end());
  }
  std::sort(validated.begin(), validated.end());
  CHECK(validated == anchors);
  CHECK_THROWS_AS(kfold_anchors(anchors, 1, a), DomainError);
  CHECK_THROWS_AS(kfold_anchors({{1, 2}}, 2, a), DomainError);
}

TEST_CASE("gru cell matches the gate equations") {
  grad::ParameterStore store;
  const int hidden = 3;
  for (const char* g : {"r", "z", "h"}) {
    store.add(std::string("cell.W_") + g, Matrix::Zero(hidden + 2, hidden));
    store.add(std::string("cell.b_") + g, Matrix::Zero(1, hidden));
  }
  Matrix v(1, hidden);
  v << 0.4, -1.2, 2.0;
  Matrix q(1, 2);
  q << 0.7, -0.3;
  auto run = [&]() {
    grad::Tape tape(&store);
    return Matrix(tape.value(gru_cell(tape, gru_weights(tape, "cell"), tape.constant(v), tape.constant(q))));
  };
  CHECK((run() - 0.5 * v).norm() < 1e-15);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  for (const char* name : {"cell.W_r", "cell.W_h", "cell.b_h"})
    for (Eigen::Index k = 0; k < store.value(name).size(); ++k) store.value(name).data()[k] = z(rng);
  grad::Tape tape(&store);
  const auto w = gru_weights(tape, "cell");
  const auto hq = tape.concat_cols({tape.constant(v), tape.constant(q)});
  const auto r = tape.sigmoid(tape.add_row(tape.matmul(hq, w.w_r), w.b_r));
  const auto cand_in = tape.concat_cols({tape.mul(r, tape.constant(v)), tape.constant(q)});
  const Matrix candidate = tape.value(tape.tanh(tape.add_row(tape.matmul(cand_in, w.w_h), w.b_h)));

  store.value("cell.b_z").setConstant(60.0);
  CHECK((run() - candidate).norm() < 1e-12);
  store.value("cell.b_z").setConstant(-60.0);
  CHECK((run() - v).norm() < 1e-12);

  // Convex combination: each component lies between h_prev and the candidate.
  for (int rep = 0; rep < 200; ++rep) {
    for (const auto& name : store.names())
      for (Eigen::Index k = 0; k < store.value(name).size(); ++k) store.value(name).data()[k] = z(rng);
    grad::Tape t(&store);
    const auto ww = gru_weights(t, "cell");
    const auto hq2 = t.concat_cols({t.constant(v), t.constant(q)});
    const auto r2 = t.sigmoid(t.add_row(t.matmul(hq2, ww.w_r), ww.b_r));
    const Matrix cand = t.value(t.tanh(
        t.add_row(t.matmul(t.concat_cols({t.mul(r2, t.constant(v)), t.constant(q)}), ww.w_h), ww.b_h)));
    const Matrix h = t.value(gru_cell(t, ww, t.constant(v), t.constant(q)));
    for (int c = 0; c < hidden; ++c) {
      CHECK(h(0, c) >= std::min(v(0, c), cand(0, c)) - 1e-15);
      CHECK(h(0, c) <= std::max(v(0, c), cand(0, c)) + 1e-15);
    }
  }
}

TEST_CASE("forward pass shape, determinism and head bias") {
  auto model = small_model(appendix(), 6, 1);
  const auto samples = build_training_samples(appendix());
  const auto a = predict(model, samples);
  const auto b = predict(model, samples);
  CHECK(a.lob1.rows() == 45);
  CHECK(a.lob1.cols() == 9);
  CHECK(a.lob1 == b.lob1);
  CHECK(a.lob2 == b.lob2);

  for (const char* head : {"head1", "head2"}) {
    model.params.value(std::string(head) + ".W1").setZero();
    model.params.value(std::string(head) + ".b1").setZero();
    model.params.value(std::string(head) + ".W2").setZero();
  }
  model.params.value("head1.b2").setConstant(0.125);
  model.params.value("head2.b2").setConstant(-0.5);
  const auto c = predict(model, samples);
  CHECK((c.lob1.array() == 0.125).all());
  CHECK((c.lob2.array() == -0.5).all());

  auto bad = samples.front();
  bad.company_index = 3;
  CHECK_THROWS_AS(predict(model, {bad}), DataError);
}

TEST_CASE("symmetric loss examples") {
  const auto s = hand_sample(4, {{0.2, 0.1}});
  Matrix p1 = Matrix::Zero(1, 4), p2 = Matrix::Zero(1, 4);
  p1(0, 0) = 0.2;
  p2(0, 0) = 0.1;
  CHECK(loss_of(p1, p2, s, LossKind::kSymmetric) == 0.0);
  p1(0, 0) = 2.2;
  CHECK(loss_of(p1, p2, s, LossKind::kSymmetric) == doctest::Approx(2.0).epsilon(1e-14));
  // Masked prediction steps do not count.
  p1(0, 3) = 1e9;
  CHECK(loss_of(p1, p2, s, LossKind::kSymmetric) == doctest::Approx(2.0).epsilon(1e-14));

  auto empty = hand_sample(4, {});
  CHECK_THROWS_AS(loss_of(p1, p2, empty, LossKind::kSymmetric), DomainError);
}

TEST_CASE("asymmetric loss examples") {
  // Population variance 1 in both columns: reduces to the symmetric loss.
  const auto unit = hand_sample(4, {{0.0, 0.0}, {2.0, 2.0}});
  Matrix p1(1, 4), p2(1, 4);
  p1 << 0.3, 1.1, 7.0, 7.0;
  p2 << -0.4, 2.5, 7.0, 7.0;
  CHECK(loss_of(p1, p2, unit, LossKind::kAsymmetric) ==
        doctest::Approx(loss_of(p1, p2, unit, LossKind::kSymmetric)).epsilon(1e-14));

  // sigma1^2 = 4, sigma2^2 = 1, unit errors on 2 steps: 1/8 + 1/2.
  const auto s = hand_sample(4, {{0.0, 0.0}, {4.0, 2.0}});
  p1 << 1.0, 5.0, 0.0, 0.0;
  p2 << 1.0, 3.0, 0.0, 0.0;
  CHECK(loss_of(p1, p2, s, LossKind::kAsymmetric) == doctest::Approx(0.625).epsilon(1e-14));

  // One valid step has zero variance: the floor keeps the loss finite.
  const auto single = hand_sample(4, {{0.5, 0.5}});
  p1.setConstant(0.5 + 1e-3);
  p2.setConstant(0.5);
  const double l = loss_of(p1, p2, single, LossKind::kAsymmetric);
  CHECK(std::isfinite(l));
  CHECK(l == doctest::Approx(1e-6 / (2.0 * kVarianceFloor)).epsilon(1e-9));
}

TEST_CASE("masked positions change neither outputs nor loss") {
  std::mt19937_64 rng(21);
  const auto data = testing::random_portfolio(6, 2, rng);
  const auto model = small_model(data, 5, 2);
  const auto samples = build_training_samples(data);
  auto perturbed = samples;
  for (auto& s : perturbed) {
    for (Eigen::Index k = 0; k < s.input.value.size(); ++k)
      if (!s.input.valid.data()[k]) s.input.value.data()[k] = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index k = 0; k < s.target.value.size(); ++k)
      if (!s.target.valid.data()[k]) s.target.value.data()[k] = 1e6;
  }
  const auto a = predict(model, samples);
  const auto b = predict(model, perturbed);
  CHECK(a.lob1 == b.lob1);
  CHECK(a.lob2 == b.lob2);
  for (auto kind : {LossKind::kSymmetric, LossKind::kAsymmetric})
    CHECK(batch_loss(model, samples, kind) == batch_loss(model, perturbed, kind));
}

TEST_CASE("analytic gradients match finite differences") {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    for (auto kind : {LossKind::kSymmetric, LossKind::kAsymmetric}) {
      const auto r = testing::random_dt_gradcheck(seed, kind);
      INFO("seed " << seed << " worst " << r.worst);
      CHECK(r.max_relative_error <= 1e-4);
      worst = std::max(worst, r.max_relative_error);
    }
  }
  MESSAGE("largest relative error " << worst);
}

TEST_CASE("embedding rows of other companies do not affect a company") {
  std::mt19937_64 rng(31);
  const auto data = testing::random_portfolio(5, 4, rng);
  auto model = small_model(data, 4, 3);
  auto samples = build_training_samples(data);
  std::vector<SequenceSample> first;
  for (const auto& s : samples)
    if (s.company_index == 0) first.push_back(s);
  const auto before = predict(model, first);
  auto& e = model.params.value("embedding");
  e.row(1).swap(e.row(3));
  e.row(2) *= -2.0;
  const auto after = predict(model, first);
  CHECK(before.lob1 == after.lob1);
  CHECK(before.lob2 == after.lob2);
}

TEST_CASE("reserve prediction fills the lower triangle") {
  const auto model = small_model(appendix(), 4, 9);
  const auto out = predict_reserves(model, appendix());
  REQUIRE(out.size() == 1);
  const auto& r = out[0];
  CHECK(r.reserves.total == r.reserves.lob1 + r.reserves.lob2);
  CHECK(r.completed.lob1.is_square());
  const auto truth = true_reserve(r.completed);
  CHECK(truth.lob1 == doctest::Approx(r.reserves.lob1).epsilon(1e-12));
  CHECK(truth.lob2 == doctest::Approx(r.reserves.lob2).epsilon(1e-12));

  // Test inputs: Y_{i,1..I+1-i}.
  const auto test = build_test_samples(appendix());
  CHECK(test.size() == 9);
  CHECK(test.front().anchor == Anchor{2, 10});
  CHECK(test.back().anchor == Anchor{10, 2});
  CHECK(test.back().input.valid.col(0).count() == 1);
  CHECK(test.front().input.valid.col(0).count() == 9);
}

TEST_CASE("training stops early and keeps the best weights") {
  TrainConfig config;
  config.hidden = 4;
  config.max_epochs = 40;
  config.patience = 1;
  config.seed = 4;
  const auto r = fit_dt(appendix(), config);
  REQUIRE(r.history.size() >= 2);
  // patience 1: the run ends at the first epoch that does not improve.
  for (std::size_t k = 1; k + 1 < r.history.size(); ++k)
    CHECK(r.history[k].validation_loss < r.history[k - 1].validation_loss);
  if (r.epochs_run < config.max_epochs) CHECK(r.history.back().validation_loss >= r.history[r.history.size() - 2].validation_loss);
  const auto corpus = build_corpus(appendix(), config);
  CHECK(evaluate_loss(r.model, corpus.validation, config.loss) == r.best_validation_loss);

  const auto again = fit_dt(appendix(), config);
  for (const auto& name : r.model.params.names()) CHECK(r.model.params.value(name) == again.model.params.value(name));

  config.patience = 0;
  CHECK_THROWS_AS(fit_dt(appendix(), config), DomainError);
}

TEST_CASE("constant targets are learned") {
  std::vector<TrianglePair> pairs;
  for (int c = 0; c < 3; ++c) {
    CellMap a, b;
    for (const auto& idx : upper_cells(10)) {
      a[idx] = 0.3;
      b[idx] = 0.1;
    }
    const std::vector<double> premiums(10, 1.0);
    pairs.push_back({LossTriangle("c" + std::to_string(c), Lob::kLob1, premiums, a),
                     LossTriangle("c" + std::to_string(c), Lob::kLob2, premiums, b)});
  }
  TrainConfig config;
  config.hidden = 32;
  config.max_epochs = 200;
  config.patience = 200;
  config.loss = LossKind::kSymmetric;
  config.seed = 2;
  const auto r = fit_dt(PortfolioDataset(std::move(pairs)), config);
  CHECK(r.best_validation_loss < 1e-4);
}

TEST_CASE("divergence is reported with the epoch") {
  TrainConfig config;
  config.hidden = 4;
  config.max_epochs = 5;
  config.patience = 5;
  config.learning_rate = 1e300;
  try {
    fit_dt(appendix(), config);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("fine tuning resumes from saved weights") {
  TrainConfig config;
  config.hidden = 6;
  config.max_epochs = 300;
  config.patience = 20;
  config.seed = 7;
  const auto base = fit_dt(appendix(), config);
  const auto tuned = fine_tune(base.model, appendix(), config);
  CHECK(tuned.history.front().validation_loss == base.best_validation_loss);
  CHECK(tuned.best_validation_loss <= base.best_validation_loss + 1e-6);

  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(fine_tune(base.model, testing::random_portfolio(6, 1, rng), config), DomainError);
}

TEST_CASE("warm starts stop sooner than cold starts") {
  const auto data = sim::generate_portfolio(sim::study_params(), 2, 77).upper();
  std::vector<int> cold, warm;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig config;
    config.hidden = 6;
    config.max_epochs = 400;
    config.patience = 15;
    config.seed = seed;
    const auto first = fit_dt(data, config);
    cold.push_back(first.epochs_run);
    warm.push_back(fine_tune(first.model, data, config).epochs_run);
  }
  std::sort(cold.begin(), cold.end());
  std::sort(warm.begin(), warm.end());
  INFO("cold " << cold[0] << "," << cold[1] << "," << cold[2] << "," << cold[3] << "," << cold[4] << " warm " << warm[0] << "," << warm[1] << "," << warm[2] << "," << warm[3] << "," << warm[4]);
  CHECK(warm[2] < cold[2]);
}

TEST_CASE("checkpoints round trip bit-exactly") {
  const auto model = small_model(appendix(), 5, 12);
  const auto path = std::filesystem::temp_directory_path() / "lossres_test_dt_checkpoint.json";
  save_checkpoint(model, path, {{"seed", 12}});
  const auto back = load_checkpoint(path);
  std::filesystem::remove(path);
  CHECK(back.arch == model.arch);
  CHECK(back.companies == model.companies);
  const auto samples = build_training_samples(appendix());
  CHECK(predict(model, samples).lob1 == predict(back, samples).lob1);
  CHECK(predict(model, samples).lob2 == predict(back, samples).lob2);
}
