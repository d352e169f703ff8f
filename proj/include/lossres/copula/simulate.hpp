#pragma once

#include "lossres/copula/regression.hpp"
#include "lossres/rng.hpp"

namespace lossres::copula {

/// Marginals plus copula for one company, enough to draw standardized losses.
struct GenerativeModel {
  MarginalSpec lob1;
  MarginalSpec lob2;
  CopulaSpec copula;
  int company_index = 0;
};

GenerativeModel model_of(const CopulaRegressionFit& fit, const std::string& company);

/// One (Y1, Y2) draw for cell (i, j): a copula pair pushed through the marginal quantiles.
std::pair<double, double> draw_cell(const GenerativeModel& model, int i, int j, Rng& rng);

/// Simulated triangles that keep the premiums and labels of
/// `like`. Cells are drawn row by row; `square` adds the lower triangle.
TrianglePair simulate_pair(const GenerativeModel& model, const TrianglePair& like, bool square, Rng& rng);

/// Reserves from one simulated lower triangle.
Reserves simulate_reserves(const GenerativeModel& model, const TrianglePair& premiums_of, Rng& rng);

}  // namespace lossres::copula
