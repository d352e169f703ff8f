#include "lossres/copula/simulate.hpp"

namespace lossres::copula {

GenerativeModel model_of(const CopulaRegressionFit& fit, const std::string& company) {
  return GenerativeModel{fit.lob1, fit.lob2, fit.copula, fit.company_index(company)};
}

std::pair<double, double> draw_cell(const GenerativeModel& model, int i, int j, Rng& rng) {
  const auto [u1, u2] = copula_sample(model.copula, rng);
  const auto& m1 = model.lob1;
  const auto& m2 = model.lob2;
  const int c = model.company_index;
  return {marginal_quantile(m1.family, m1.eta(i, j, c), m1.shape, u1),
          marginal_quantile(m2.family, m2.eta(i, j, c), m2.shape, u2)};
}

TrianglePair simulate_pair(const GenerativeModel& model, const TrianglePair& like, bool square, Rng& rng) {
  const int origins = like.lob1.origins();
  CellMap c1, c2;
  for (int i = 1; i <= origins; ++i)
    for (int j = 1; j <= origins; ++j) {
      if (!square && !in_upper(origins, i, j)) continue;
      const auto [y1, y2] = draw_cell(model, i, j, rng);
      c1[{i, j}] = y1 * like.lob1.premium(i);
      c2[{i, j}] = y2 * like.lob2.premium(i);
    }
  const auto& p1 = like.lob1.premiums();
  const auto& p2 = like.lob2.premiums();
  return TrianglePair{
      LossTriangle(like.company(), Lob::kLob1, std::vector<double>(p1.begin(), p1.end()), c1, like.lob1.origin_labels()),
      LossTriangle(like.company(), Lob::kLob2, std::vector<double>(p2.begin(), p2.end()), c2, like.lob2.origin_labels())};
}

Reserves simulate_reserves(const GenerativeModel& model, const TrianglePair& premiums_of, Rng& rng) {
  const int origins = premiums_of.lob1.origins();
  double r1 = 0.0, r2 = 0.0;
  for (const auto& idx : lower_cells(origins)) {
    const auto [y1, y2] = draw_cell(model, idx.accident, idx.development, rng);
    r1 += y1 * premiums_of.lob1.premium(idx.accident);
    r2 += y2 * premiums_of.lob2.premium(idx.accident);
  }
  return Reserves::of(r1, r2);
}

}  // namespace lossres::copula
