#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "lossres/error.hpp"
#include "lossres/grad/amsgrad.hpp"
#include "lossres/grad/parameter_store.hpp"
#include "lossres/grad/tape.hpp"

using namespace lossres;
using namespace lossres::grad;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Builds a small recurrent-style graph exercising every op; returns the loss value.
using Builder = std::function<Var(Tape&)>;

double evaluate(const ParameterStore& store, const Builder& build) {
  Tape tape(&store);
  return tape.scalar(build(tape));
}

// Central-difference oracle compared against reverse mode, entry by entry.
void check_against_finite_differences(ParameterStore& store, const Builder& build) {
  Tape tape(&store);
  const auto grads = tape.backward(build(tape));
  const double h = 1e-5;
  for (const auto& name : store.names()) {
    Matrix& p = store.value(name);
    const Matrix& g = grads.at(name);
    REQUIRE(g.rows() == p.rows());
    REQUIRE(g.cols() == p.cols());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double saved = p.data()[k];
      p.data()[k] = saved + h;
      const double up = evaluate(store, build);
      p.data()[k] = saved - h;
      const double down = evaluate(store, build);
      p.data()[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = g.data()[k];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
      INFO(name << "[" << k << "] analytic=" << an << " fd=" << fd);
      CHECK(std::abs(an - fd) / denom <= 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("gradient of a parameter summed is all ones") {
  ParameterStore store;
  std::mt19937_64 rng(1);
  store.add("w", random_matrix(3, 4, rng));
  Tape tape(&store);
  const auto grads = tape.backward(tape.sum(tape.param("w")));
  CHECK(grads.at("w").isApprox(Matrix::Ones(3, 4)));
}

TEST_CASE("sigmoid(Wx) at W = 0 has gradient x / 4") {
  ParameterStore store;
  store.add("W", Matrix::Zero(1, 3));
  Matrix x(3, 1);
  x << 0.5, -2.0, 3.0;
  Tape tape(&store);
  const auto loss = tape.sum(tape.sigmoid(tape.matmul(tape.param("W"), tape.constant(x))));
  CHECK(tape.scalar(loss) == doctest::Approx(0.5));
  const auto grads = tape.backward(loss);
  for (int k = 0; k < 3; ++k) CHECK(grads.at("W")(0, k) == doctest::Approx(0.25 * x(k)).epsilon(1e-15));
}

TEST_CASE("reverse mode matches central differences on random graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index batch = 2 + trial % 4;
    const Eigen::Index in = 3, hidden = 4, vocab = 3;
    ParameterStore store;
    store.add("Wz", random_matrix(in + 2, hidden, rng, 0.5));
    store.add("Uz", random_matrix(hidden, hidden, rng, 0.5));
    store.add("bz", random_matrix(1, hidden, rng, 0.1));
    store.add("Wh", random_matrix(in + 2, hidden, rng, 0.5));
    store.add("emb", random_matrix(vocab, 2, rng, 0.5));
    store.add("head", random_matrix(hidden, 2, rng, 0.5));
    store.add("unused", random_matrix(2, 2, rng));

    const Matrix x0 = random_matrix(batch, in, rng);
    const Matrix x1 = random_matrix(batch, in, rng);
    std::vector<int> company;
    std::vector<bool> step_valid;
    for (Eigen::Index r = 0; r < batch; ++r) {
      company.push_back(static_cast<int>(rng() % vocab));
      step_valid.push_back(r % 2 == 0);
    }
    MaskedMatrix target{random_matrix(batch, 2, rng), BoolArray::Constant(batch, 2, true)};
    target.valid(0, 1) = false;
    target.value(0, 1) = std::numeric_limits<double>::quiet_NaN();
    Matrix weight = Matrix::Constant(batch, 2, 0.3);
    weight(batch - 1, 0) = 1.7;

    const Builder build = [&](Tape& t) {
      const Var e = t.gather_rows(t.param("emb"), company);
      Var h = t.constant(Matrix::Zero(batch, hidden));
      for (const Matrix* x : {&x0, &x1}) {
        const Var input = t.concat_cols({t.constant(*x), e});
        const Var z = t.sigmoid(t.add_row(t.add(t.matmul(input, t.param("Wz")), t.matmul(h, t.param("Uz"))),
                                          t.param("bz")));
        const Var cand = t.tanh(t.matmul(input, t.param("Wh")));
        const Var next = t.add(t.mul(z, cand), t.mul(t.one_minus(z), h));
        h = t.select_rows(x == &x0 ? std::vector<bool>(batch, true) : step_valid, next, h);
      }
      const Var act = t.relu(t.sub(t.matmul(h, t.param("head")), t.constant(Matrix::Constant(batch, 2, -0.05))));
      const Var left = t.slice_cols(act, 0, 1);
      const Var right = t.scale(t.slice_cols(act, 1, 1), 2.5);
      return t.masked_weighted_sse(t.concat_cols({left, right}), target, weight);
    };
    check_against_finite_differences(store, build);

    Tape tape(&store);
    const auto grads = tape.backward(build(tape));
    CHECK(grads.at("unused").isZero());
  }
}

TEST_CASE("masked targets contribute nothing") {
  ParameterStore store;
  std::mt19937_64 rng(3);
  store.add("p", random_matrix(3, 2, rng));
  MaskedMatrix target{random_matrix(3, 2, rng), BoolArray::Constant(3, 2, false)};
  target.value(1, 1) = std::numeric_limits<double>::infinity();
  Tape tape(&store);
  const auto loss = tape.masked_weighted_sse(tape.param("p"), target, Matrix::Ones(3, 2));
  CHECK(tape.scalar(loss) == 0.0);
  const auto grads = tape.backward(loss);
  CHECK(grads.at("p").isZero());

  target.valid(2, 0) = true;
  Tape tape2(&store);
  const auto g2 = tape2.backward(tape2.masked_weighted_sse(tape2.param("p"), target, Matrix::Ones(3, 2)));
  CHECK(g2.at("p")(2, 0) == doctest::Approx(2.0 * (store.value("p")(2, 0) - target.value(2, 0))));
  CHECK(g2.at("p").cwiseAbs().sum() == doctest::Approx(std::abs(g2.at("p")(2, 0))));
}

TEST_CASE("non-finite values are reported with the node") {
  ParameterStore store;
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  store.add("p", bad);
  Tape tape(&store);
  const auto loss = tape.sum(tape.tanh(tape.param("p")));
  try {
    tape.backward(loss);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("node") != std::string::npos);
  }
  Tape tape2(&store);
  CHECK_THROWS_AS(tape2.backward(tape2.tanh(tape2.param("p"))), DomainError);
}

TEST_CASE("AMSGRAD update rules") {
  const AmsGradConfig cfg;
  SUBCASE("zero gradient leaves parameters unchanged") {
    ParameterStore store;
    std::mt19937_64 rng(4);
    const Matrix init = random_matrix(3, 3, rng);
    store.add("w", init);
    for (int k = 0; k < 5; ++k) amsgrad_step(store, {{"w", Matrix::Zero(3, 3)}}, cfg);
    CHECK(store.value("w") == init);
    CHECK(store.step() == 5);
  }
  SUBCASE("first step moves each entry by lr against the gradient sign") {
    ParameterStore store;
    store.add("w", Matrix::Zero(1, 3));
    Matrix g(1, 3);
    g << 3.0, -1e-3, 250.0;
    amsgrad_step(store, {{"w", g}}, cfg);
    for (int k = 0; k < 3; ++k) {
      // epsilon sits outside the bias correction, so it is scaled by 1 / sqrt(1 - beta2).
      const double expect = -cfg.learning_rate * g(k) / (std::abs(g(k)) + cfg.epsilon / std::sqrt(1.0 - cfg.beta2));
      CHECK(store.value("w")(0, k) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("step size never exceeds the learning rate scale and max moment is monotone") {
    ParameterStore store;
    store.add("w", Matrix::Zero(4, 1));
    std::mt19937_64 rng(5);
    Matrix previous_max = Matrix::Zero(4, 1);
    for (int k = 0; k < 200; ++k) {
      const Matrix before = store.value("w");
      amsgrad_step(store, {{"w", random_matrix(4, 1, rng, k < 100 ? 5.0 : 0.01)}}, cfg);
      const Matrix& vmax = store.slot("w").max_second_moment;
      CHECK((vmax.array() >= previous_max.array()).all());
      CHECK((vmax.array() >= store.slot("w").second_moment.array()).all());
      previous_max = vmax;
      const double t = static_cast<double>(store.step());
      // Cauchy-Schwarz on the two moment sums bounds |m| / sqrt(v_max).
      const double ratio = (1.0 - cfg.beta1) /
                           std::sqrt((1.0 - cfg.beta2) * (1.0 - cfg.beta1 * cfg.beta1 / cfg.beta2));
      const double bound = cfg.learning_rate * std::sqrt(1.0 - std::pow(cfg.beta2, t)) /
                           (1.0 - std::pow(cfg.beta1, t)) * ratio;
      CHECK((store.value("w") - before).cwiseAbs().maxCoeff() <= bound * 1.0000001);
    }
  }
  SUBCASE("non-finite gradient leaves the store untouched") {
    ParameterStore store;
    store.add("a", Matrix::Ones(2, 1));
    store.add("b", Matrix::Ones(2, 1));
    Matrix bad = Matrix::Ones(2, 1);
    bad(1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(amsgrad_step(store, {{"a", Matrix::Ones(2, 1)}, {"b", bad}}, cfg), NumericError);
    CHECK(store.value("a") == Matrix::Ones(2, 1));
    CHECK(store.step() == 0);
    CHECK_THROWS_AS(amsgrad_step(store, {{"a", Matrix::Ones(3, 1)}}, cfg), DomainError);
  }
}

TEST_CASE("AMSGRAD descends a quadratic bowl") {
  AmsGradConfig cfg;
  cfg.learning_rate = 0.01;
  const Objective bowl = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  const auto result = minimize_amsgrad(bowl, Eigen::Vector2d(1.0, 1.0), cfg, 2000, 2e-3);
  CHECK(result.converged);
  CHECK(result.steps <= 2000);
  CHECK(result.x.norm() < 1e-3);
}

TEST_CASE("He initialization variance and determinism") {
  const Eigen::Index fan_in = 50;
  Rng rng(77);
  const Matrix w = he_init(1000, 100, fan_in, rng);
  const double n = static_cast<double>(w.size());
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (n - 1.0);
  const double target = 2.0 / static_cast<double>(fan_in);
  CHECK(std::abs(var - target) / target < 0.05);
  CHECK(std::abs(mean) < 3.0 * std::sqrt(target / n));

  Rng a(123), b(123);
  CHECK(he_init(7, 5, 7, a) == he_init(7, 5, 7, b));
  CHECK_THROWS_AS(he_init(2, 2, 0, a), DomainError);
}

TEST_CASE("checkpoint JSON restores parameters bit for bit") {
  ParameterStore store;
  std::mt19937_64 rng(8);
  store.add("W", random_matrix(5, 3, rng));
  store.add("b", random_matrix(1, 3, rng, 1e-300));
  store.value("b")(0, 0) = 0.1;
  const auto text = store.to_json().dump();
  const auto back = ParameterStore::from_json(nlohmann::json::parse(text));
  REQUIRE(back.names() == store.names());
  for (const auto& name : store.names()) {
    const Matrix& a = store.value(name);
    const Matrix& c = back.value(name);
    REQUIRE(a.rows() == c.rows());
    REQUIRE(a.cols() == c.cols());
    for (Eigen::Index k = 0; k < a.size(); ++k)
      CHECK(std::bit_cast<std::uint64_t>(a.data()[k]) == std::bit_cast<std::uint64_t>(c.data()[k]));
  }
}
