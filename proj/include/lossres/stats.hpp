#pragma once

#include <span>
#include <vector>

namespace lossres {

/// Kendall's tau-b in O(n log n) (Knight's merge-sort count).
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

double mean(std::span<const double> x);
/// Sample standard deviation with the n - 1 divisor.
double sample_std(std::span<const double> x);

}  // namespace lossres
