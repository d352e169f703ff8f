#pragma once

#include <cstdint>
#include <string>

#include "lossres/rng.hpp"
#include "lossres/sim/params.hpp"

namespace lossres::sim {

/// Full I x I square pair: a copula pair per cell, marginal quantiles, then
/// scaling by the accident-year premium. Cells are drawn row by row.
TrianglePair generate_pair(const SimParams& params, Rng& rng, const std::string& company = "sim");

/// `pairs` squares; pair k uses stream_rng(seed, k) and the name "simNN".
PortfolioDataset generate_portfolio(const SimParams& params, int pairs, std::uint64_t seed);

}  // namespace lossres::sim
