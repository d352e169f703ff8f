#include "lossres/resample/copula_resample.hpp"

#include <optional>

#include "lossres/copula/simulate.hpp"
#include "lossres/error.hpp"

namespace lossres::resample {

namespace {

void require_replications(int replications) {
  if (replications < 1) throw DomainError("resampling needs at least one replication");
}

}  // namespace

ReserveDistribution mc_simulate(const copula::CopulaRegressionFit& fit, const TrianglePair& pair, int replications,
                                std::uint64_t seed, const ParallelOptions& parallel) {
  require_replications(replications);
  const auto model = copula::model_of(fit, pair.company());
  std::vector<std::optional<Reserves>> slots(static_cast<std::size_t>(replications));
  for_each_index(replications, parallel, [&](int k) {
    try {
      Rng rng = stream_rng(seed, static_cast<std::uint64_t>(k));
      slots[static_cast<std::size_t>(k)] = copula::simulate_reserves(model, pair, rng);
    } catch (const std::exception&) {
      slots[static_cast<std::size_t>(k)].reset();
    }
  });
  return collect_replications("mc", seed, slots);
}

ReserveDistribution parametric_bootstrap(const copula::CopulaRegressionFit& fit, const TrianglePair& pair,
                                         int replications, std::uint64_t seed, const ParallelOptions& parallel) {
  require_replications(replications);
  const auto model = copula::model_of(fit, pair.company());
  auto options = fit.options;
  options.compute_covariance = false;
  options.company_effects = false;
  std::vector<std::optional<Reserves>> slots(static_cast<std::size_t>(replications));
  for_each_index(replications, parallel, [&](int k) {
    try {
      Rng rng = stream_rng(seed, static_cast<std::uint64_t>(k));
      const auto upper = copula::simulate_pair(model, pair, false, rng);
      const auto refit = copula::fit(upper, options);
      if (!refit.convergence.converged) return;
      slots[static_cast<std::size_t>(k)] = copula::simulate_reserves(copula::model_of(refit, pair.company()), pair, rng);
    } catch (const std::exception&) {
      slots[static_cast<std::size_t>(k)].reset();
    }
  });
  return collect_replications("parametric_bootstrap", seed, slots);
}

}  // namespace lossres::resample
