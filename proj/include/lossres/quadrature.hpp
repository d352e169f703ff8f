#pragma once

#include <vector>

namespace lossres {

/// Gauss-Legendre nodes and weights on [a, b].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

}  // namespace lossres
