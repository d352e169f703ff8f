#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lossres/error.hpp"
#include "lossres/risk/metrics.hpp"

using namespace lossres;
using namespace lossres::risk;

namespace {

std::vector<double> one_to(int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

double brute_var(std::vector<double> s, double k) {
  std::sort(s.begin(), s.end());
  const auto n = static_cast<double>(s.size());
  std::size_t idx = 1;
  while (static_cast<double>(idx) < n * k - 1e-9) ++idx;
  return s[idx - 1];
}

double brute_tvar(const std::vector<double>& s, double k) {
  const double v = brute_var(s, k);
  double sum = 0.0;
  int count = 0;
  for (double x : s) {
    if (x >= v) {
      sum += x;
      ++count;
    }
  }
  return sum / count;
}

std::vector<double> random_sample(std::mt19937_64& rng, int n) {
  std::lognormal_distribution<double> d(0.0, 0.7);
  std::vector<double> s(static_cast<std::size_t>(n));
  for (auto& x : s) x = d(rng);
  return s;
}

}  // namespace

TEST_CASE("var and tvar follow the ceil(nk) order statistic") {
  const auto s = one_to(100);
  CHECK(var(s, 0.95) == 95.0);
  CHECK(tvar(s, 0.95) == doctest::Approx(97.5).epsilon(1e-15));
  const std::vector<double> c(17, 3.25);
  for (double k : kDefaultLevels) {
    CHECK(var(c, k) == 3.25);
    CHECK(tvar(c, k) == 3.25);
    CHECK(risk_capital(c, k) == 0.0);
  }
  CHECK_THROWS_AS(var(std::vector<double>{}, 0.5), DomainError);
  CHECK_THROWS_AS(var(s, 1.5), DomainError);
  CHECK_THROWS_AS(risk_capital(s, 0.5), DomainError);
}

TEST_CASE("var, tvar and risk capital match brute force") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = random_sample(rng, 1 + static_cast<int>(rng() % 300));
    for (double k : {0.01, 0.3, 0.6, 0.8, 0.85, 0.9, 0.95, 0.99}) {
      CHECK(var(s, k) == brute_var(s, k));
      CHECK(tvar(s, k) == doctest::Approx(brute_tvar(s, k)).epsilon(1e-13));
      if (k >= 0.6) {
        CHECK(risk_capital(s, k) ==
              doctest::Approx(brute_tvar(s, k) - brute_tvar(s, 0.6)).epsilon(1e-12).scale(brute_tvar(s, k)));
      }
    }
  }
}

TEST_CASE("tvar is at least var on random samples") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> level(0.01, 0.999);
  for (int rep = 0; rep < 10000; ++rep) {
    const auto s = random_sample(rng, 1 + static_cast<int>(rng() % 50));
    const double k = level(rng);
    REQUIRE(tvar(s, k) >= var(s, k));
  }
}

TEST_CASE("tvar coherence properties") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unit(-0.99, 0.99);
  const std::vector<double> grid{0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99};
  for (int rep = 0; rep < 1000; ++rep) {
    // Correlated lognormal pair with a random dependence sign and strength.
    const double rho = unit(rng);
    const double s1 = 0.1 + 0.9 * std::abs(unit(rng));
    const double s2 = 0.1 + 0.9 * std::abs(unit(rng));
    const int n = 200;
    std::vector<double> a(n), b(n), sum(n);
    for (int t = 0; t < n; ++t) {
      const double e1 = z(rng);
      const double e2 = rho * e1 + std::sqrt(1 - rho * rho) * z(rng);
      a[t] = std::exp(s1 * e1);
      b[t] = 3.0 * std::exp(s2 * e2);
      sum[t] = a[t] + b[t];
    }
    double previous = -INFINITY;
    for (double k : grid) {
      const double joint = tvar(sum, k);
      REQUIRE(joint <= tvar(a, k) + tvar(b, k) + 1e-12 * joint);
      const double t = tvar(a, k);
      REQUIRE(t >= previous);
      previous = t;
    }
  }

  const auto s = random_sample(rng, 257);
  std::vector<double> shifted(s), scaled(s);
  for (auto& x : shifted) x += 1234.5;
  for (auto& x : scaled) x *= 7.25;
  for (double k : grid) {
    CHECK(tvar(shifted, k) == doctest::Approx(tvar(s, k) + 1234.5).epsilon(1e-13));
    CHECK(tvar(scaled, k) == doctest::Approx(7.25 * tvar(s, k)).epsilon(1e-13));
    if (k >= 0.6) CHECK(risk_capital(shifted, k) == doctest::Approx(risk_capital(s, k)).epsilon(1e-9));
  }
}

TEST_CASE("silo aggregation and gain") {
  std::mt19937_64 rng(14);
  const auto a = random_sample(rng, 400);
  // Comonotone copy: TVaR is additive.
  std::vector<double> sum(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) sum[t] = 2.0 * a[t];
  CHECK(silo(a, a, 0.99) == doctest::Approx(risk_capital(sum, 0.99)).epsilon(1e-12));

  // Antithetic second line: joint capital falls below the silo total.
  std::normal_distribution<double> z;
  std::vector<double> x(2000), y(2000), joint(2000);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double e = z(rng);
    x[t] = std::exp(0.3 * e);
    y[t] = std::exp(-0.3 * e + 0.1 * z(rng));
    joint[t] = x[t] + y[t];
  }
  CHECK(risk_capital(joint, 0.99) < silo(x, y, 0.99));

  const std::vector<double> c(10, 5.0);
  CHECK(silo(c, c, 0.95) == 0.0);

  CHECK(gain(228941.0, 89255.0) == doctest::Approx(0.6101).epsilon(5e-4 / 0.6101));
  CHECK(gain(10.0, 10.0) == 0.0);
  CHECK(gain(10.0, 0.0) == 1.0);
  CHECK_THROWS_AS(gain(0.0, 1.0), DomainError);
}

TEST_CASE("summarize reports moments, interval and ladder") {
  const std::vector<double> pair{4.0, 4.0};
  const auto flat = summarize(pair, 4.0);
  CHECK(flat.std == 0.0);
  CHECK(flat.cv == 0.0);
  CHECK(flat.ci_lower == 4.0);
  CHECK(flat.ci_upper == 4.0);
  CHECK(flat.bias_pct == 0.0);

  std::mt19937_64 rng(15);
  const auto s = random_sample(rng, 1001);
  const auto report = summarize(s, 1.0);
  CHECK(report.count == s.size());
  CHECK(report.ci_lower == brute_var(s, 0.025));
  CHECK(report.ci_upper == brute_var(s, 0.975));
  const double m = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  CHECK(report.mean == doctest::Approx(m).epsilon(1e-13));
  CHECK(report.bias_pct == doctest::Approx(100.0 * (m - 1.0)).epsilon(1e-12));
  CHECK(report.cv == doctest::Approx(report.std / report.mean).epsilon(1e-15));
  REQUIRE(report.ladder.size() == kDefaultLevels.size());
  for (std::size_t r = 1; r < report.ladder.size(); ++r) {
    CHECK(report.ladder[r].tvar >= report.ladder[r - 1].tvar);
    CHECK(report.ladder[r].tvar >= report.ladder[r].var);
  }
  CHECK(report.ladder[0].risk_capital == 0.0);
  CHECK_THROWS(summarize(std::vector<double>{1.0}, 1.0));
  const auto j = to_json(report);
  CHECK(j["ladder"].size() == kDefaultLevels.size());
}
