#include "lossres/risk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lossres/error.hpp"
#include "lossres/stats.hpp"

namespace lossres::risk {

namespace {

void require_sample(std::span<const double> sample, double k, const char* what) {
  if (sample.empty()) throw DomainError(std::string(what) + ": empty sample");
  if (!(k > 0.0 && k < 1.0)) throw DomainError(std::string(what) + ": level must lie in (0, 1)");
}

std::size_t order_index(std::size_t n, double k) {
  // The small slack keeps products such as 100 * 0.95 on the intended integer.
  const double pos = std::ceil(static_cast<double>(n) * k - 1e-9);
  return static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(n))) - 1;
}

double sorted_var(const std::vector<double>& sorted, double k) { return sorted[order_index(sorted.size(), k)]; }

double sorted_tvar(const std::vector<double>& sorted, double k) {
  const double v = sorted_var(sorted, k);
  const auto first = std::lower_bound(sorted.begin(), sorted.end(), v);
  double sum = 0.0;
  for (auto it = first; it != sorted.end(); ++it) sum += *it;
  return sum / static_cast<double>(sorted.end() - first);
}

std::vector<double> sorted_copy(std::span<const double> sample) {
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

double var(std::span<const double> sample, double k) {
  require_sample(sample, k, "var");
  std::vector<double> s(sample.begin(), sample.end());
  const auto idx = static_cast<std::ptrdiff_t>(order_index(s.size(), k));
  std::nth_element(s.begin(), s.begin() + idx, s.end());
  return s[static_cast<std::size_t>(idx)];
}

double tvar(std::span<const double> sample, double k) {
  require_sample(sample, k, "tvar");
  return sorted_tvar(sorted_copy(sample), k);
}

double risk_capital(std::span<const double> sample, double k) {
  if (k < 0.6) throw DomainError("risk_capital: level must be at least 0.6");
  require_sample(sample, k, "risk_capital");
  const auto s = sorted_copy(sample);
  return sorted_tvar(s, k) - sorted_tvar(s, 0.6);
}

double silo(std::span<const double> lob1, std::span<const double> lob2, double k) {
  return risk_capital(lob1, k) + risk_capital(lob2, k);
}

double gain(double rc_silo, double rc_model) {
  if (!(rc_silo > 0.0)) throw DomainError("gain: silo risk capital must be positive");
  return (rc_silo - rc_model) / rc_silo;
}

RiskReport summarize(std::span<const double> total, double point_reserve, const std::vector<double>& levels) {
  if (total.size() < 2) throw DomainError("summarize: need at least two draws");
  const auto s = sorted_copy(total);
  RiskReport r;
  r.count = s.size();
  r.mean = mean(total);
  r.std = sample_std(total);
  r.cv = r.mean != 0.0 ? r.std / r.mean : 0.0;
  r.point_reserve = point_reserve;
  r.bias_pct = point_reserve != 0.0 ? 100.0 * (r.mean - point_reserve) / point_reserve : 0.0;
  r.ci_lower = sorted_var(s, 0.025);
  r.ci_upper = sorted_var(s, 0.975);
  const double base = sorted_tvar(s, 0.6);
  for (double k : levels) {
    if (!(k > 0.0 && k < 1.0)) throw DomainError("summarize: level must lie in (0, 1)");
    LevelRow row{k, sorted_var(s, k), sorted_tvar(s, k), std::numeric_limits<double>::quiet_NaN()};
    if (k >= 0.6) row.risk_capital = row.tvar - base;
    r.ladder.push_back(row);
  }
  return r;
}

nlohmann::json to_json(const RiskReport& report) {
  nlohmann::json j{{"count", report.count},         {"mean", report.mean},
                   {"std", report.std},             {"cv", report.cv},
                   {"point_reserve", report.point_reserve}, {"bias_pct", report.bias_pct},
                   {"ci95", {report.ci_lower, report.ci_upper}}};
  nlohmann::json ladder = nlohmann::json::array();
  for (const auto& row : report.ladder) {
    nlohmann::json e{{"level", row.level}, {"var", row.var}, {"tvar", row.tvar}};
    if (std::isnan(row.risk_capital)) e["risk_capital"] = nullptr; else e["risk_capital"] = row.risk_capital;
    ladder.push_back(e);
  }
  j["ladder"] = ladder;
  return j;
}

}  // namespace lossres::risk
