#pragma once

#include <cstdint>

#include "lossres/copula/regression.hpp"
#include "lossres/parallel.hpp"
#include "lossres/resample/distribution.hpp"

namespace lossres::resample {

/// Lower-triangle simulation from the fitted model; parameter uncertainty is
/// excluded. Replication k draws from stream_rng(seed, k).
ReserveDistribution mc_simulate(const copula::CopulaRegressionFit& fit, const TrianglePair& pair, int replications,
                                std::uint64_t seed, const ParallelOptions& parallel = {});

/// Simulate an upper triangle pair from the fit, refit the same model on it, then
/// simulate the lower triangle from the refit. Non-converged refits are dropped.
ReserveDistribution parametric_bootstrap(const copula::CopulaRegressionFit& fit, const TrianglePair& pair,
                                         int replications, std::uint64_t seed, const ParallelOptions& parallel = {});

}  // namespace lossres::resample
