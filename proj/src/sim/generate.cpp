#include "lossres/sim/generate.hpp"

#include <cstdio>

namespace lossres::sim {

TrianglePair generate_pair(const SimParams& params, Rng& rng, const std::string& company) {
  params.validate();
  CellMap c1, c2;
  for (int i = 1; i <= params.origins; ++i) {
    const auto row = static_cast<std::size_t>(i - 1);
    for (int j = 1; j <= params.origins; ++j) {
      const auto [u1, u2] = copula::copula_sample(params.copula, rng);
      const double y1 = copula::marginal_quantile(copula::MarginalFamily::kLognormal, params.eta1(i, j), params.shape1, u1);
      const double y2 = copula::marginal_quantile(copula::MarginalFamily::kGamma, params.eta2(i, j), params.shape2, u2);
      c1[{i, j}] = y1 * params.premium1[row];
      c2[{i, j}] = y2 * params.premium2[row];
    }
  }
  return TrianglePair{LossTriangle(company, Lob::kLob1, params.premium1, c1),
                      LossTriangle(company, Lob::kLob2, params.premium2, c2)};
}

PortfolioDataset generate_portfolio(const SimParams& params, int pairs, std::uint64_t seed) {
  std::vector<TrianglePair> out;
  for (int k = 0; k < pairs; ++k) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(k));
    char name[16];
    std::snprintf(name, sizeof name, "sim%02d", k + 1);
    out.push_back(generate_pair(params, rng, name));
  }
  return PortfolioDataset(std::move(out));
}

}  // namespace lossres::sim
