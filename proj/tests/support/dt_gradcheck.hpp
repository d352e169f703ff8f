#pragma once

// Random small DT configurations and a central-difference gradient oracle,
// shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lossres/dt/model.hpp"
#include "lossres/dt/train.hpp"

namespace lossres::testing {

/// Upper-triangle portfolio with positive random cells and unit premiums.
inline PortfolioDataset random_portfolio(int origins, int companies, std::mt19937_64& rng) {
  std::lognormal_distribution<double> cell(-1.5, 0.6);
  std::vector<TrianglePair> pairs;
  for (int c = 0; c < companies; ++c) {
    CellMap a, b;
    for (const auto& idx : upper_cells(origins)) {
      a[idx] = cell(rng);
      b[idx] = cell(rng);
    }
    const std::vector<double> premiums(static_cast<std::size_t>(origins), 1.0);
    const std::string name = "co" + std::to_string(c);
    pairs.push_back({LossTriangle(name, Lob::kLob1, premiums, a), LossTriangle(name, Lob::kLob2, premiums, b)});
  }
  return PortfolioDataset(std::move(pairs));
}

struct GradCheckOutcome {
  double max_relative_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
  std::size_t kink_retries = 0;  ///< entries re-differenced with a smaller step
};

/// Compares reverse-mode gradients of the batch loss with central differences
/// (h = 1e-5) for every parameter entry. The relative error of an entry is
/// |analytic - fd| / max(|analytic|, |fd|, 1e-3 * max(1, |loss|)). The floor
/// tracks the loss because central differences carry roundoff of order
/// eps * |loss| / h, and the asymmetric loss reaches 1e6 when a one-step target
/// hits the variance floor. Entries whose step straddles a ReLU kink are
/// re-differenced with h = 1e-8.
inline GradCheckOutcome check_dt_gradient(dt::DtModel& model, const std::vector<dt::SequenceSample>& samples,
                                          dt::LossKind kind) {
  std::vector<const dt::SequenceSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  auto value = [&]() {
    grad::Tape tape(&model.params);
    return tape.scalar(dt::loss(tape, dt::forward(tape, model, batch), batch, kind));
  };
  grad::Tape tape(&model.params);
  const auto loss_node = dt::loss(tape, dt::forward(tape, model, batch), batch, kind);
  const double base = tape.scalar(loss_node);
  const double floor = 1e-3 * std::max(1.0, std::abs(base));
  const auto grads = tape.backward(loss_node);

  GradCheckOutcome out;
  const double h = 1e-5;
  for (const auto& name : model.params.names()) {
    auto& p = model.params.value(name);
    const auto& g = grads.at(name);
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double saved = p.data()[k];
      auto central = [&](double step) {
        p.data()[k] = saved + step;
        const double up = value();
        p.data()[k] = saved - step;
        const double down = value();
        p.data()[k] = saved;
        return std::pair{(up - down) / (2.0 * step), (up + down - 2.0 * base) / step};
      };
      const double an = g.data()[k];
      auto relative = [&](double fd) { return std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), floor}); };
      auto [fd, slope_jump] = central(h);
      double rel = relative(fd);
      // One-sided slopes that disagree by more than smooth curvature allows mean a
      // ReLU kink lies inside [x - h, x + h]; retry with a step that avoids it.
      if (rel > 1e-4 && std::abs(slope_jump) > 1e-4 * std::max({std::abs(an), std::abs(fd), floor})) {
        fd = central(h * 1e-3).first;
        rel = relative(fd);
        ++out.kink_retries;
      }
      ++out.checked;
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst = name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return out;
}

/// One random small configuration: 3-5 accident years, 1-3 companies, GRU
/// width 2-5, random history cap, a random subset of the training samples.
inline GradCheckOutcome random_dt_gradcheck(std::uint64_t seed, dt::LossKind kind) {
  std::mt19937_64 rng(seed);
  const int origins = 3 + static_cast<int>(rng() % 3);
  const int companies = 1 + static_cast<int>(rng() % 3);
  const int hidden = 2 + static_cast<int>(rng() % 4);
  const auto data = random_portfolio(origins, companies, rng);
  const int history = static_cast<int>(rng() % static_cast<std::uint64_t>(origins));
  auto samples = dt::build_training_samples(data, history);
  std::shuffle(samples.begin(), samples.end(), rng);
  samples.resize(std::min<std::size_t>(samples.size(), 2 + rng() % 5));

  std::vector<std::string> names;
  for (const auto& pair : data) names.push_back(pair.company());
  Rng init(seed ^ 0xabcdefULL);
  const auto arch = dt::Architecture::for_data(origins, companies, hidden);
  auto model = dt::init_model(arch, names, init);
  // Nonzero biases so every gate and head sees generic inputs.
  std::normal_distribution<double> z(0.0, 0.3);
  for (const auto& name : model.params.names()) {
    auto& p = model.params.value(name);
    if (name.find(".b") != std::string::npos)
      for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = z(rng);
  }
  return check_dt_gradient(model, samples, kind);
}

}  // namespace lossres::testing
