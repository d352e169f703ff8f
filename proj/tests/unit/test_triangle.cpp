#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "lossres/error.hpp"
#include "lossres/triangle.hpp"
#include "lossres/triangle_io.hpp"

using namespace lossres;

namespace {

std::filesystem::path data_dir() { return LOSSRES_DATA_DIR; }

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lossres_test_triangle";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

LossTriangle random_triangle(std::mt19937_64& rng, int origins, bool square, Lob lob = Lob::kLob1,
                             const std::string& company = "c") {
  std::uniform_real_distribution<double> prem(1e5, 1e7), val(0.0, 1e6);
  std::vector<double> premiums;
  for (int i = 0; i < origins; ++i) premiums.push_back(prem(rng));
  CellMap cells;
  for (int i = 1; i <= origins; ++i)
    for (int j = 1; j <= origins; ++j)
      if (square || in_upper(origins, i, j)) cells[{i, j}] = val(rng);
  return LossTriangle(company, lob, premiums, cells);
}

}  // namespace

TEST_CASE("appendix table parses with the published first cell and premium") {
  const auto data = parse_triangle_csv(data_dir() / "appendix_wide.csv", CsvSchema::kWide);
  REQUIRE(data.size() == 1);
  CHECK(data.origins() == 10);
  const auto& lob1 = data[0].lob1;
  CHECK(lob1.value(1, 1) == 1376384.0);
  CHECK(lob1.premium(1) == 4711333.0);
  CHECK(lob1.origin_labels().front() == 1988);
  CHECK(data[0].lob2.value(10, 1) == 37554.0);
  CHECK(lob1.shape() == TriangleShape::kUpper);
  CHECK_FALSE(lob1.has(2, 10));
}

TEST_CASE("empty file reports the missing header") {
  const auto p = temp_path("empty.csv");
  write_file(p, "");
  const auto prem = temp_path("empty_prem.csv");
  write_file(prem, kPremiumHeader + std::string("\n"));
  try {
    parse_triangle_csv(p, CsvSchema::kLong, prem);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("missing header") != std::string::npos);
    CHECK(std::string(e.what()).find(kLongHeader) != std::string::npos);
  }
}

TEST_CASE("long CSV round trip reproduces the dataset exactly") {
  auto data = parse_triangle_csv(data_dir() / "appendix_wide.csv", CsvSchema::kWide);
  std::mt19937_64 rng(7);
  std::vector<TrianglePair> pairs(data.begin(), data.end());
  pairs.push_back({random_triangle(rng, 10, true, Lob::kLob1, "sq"), random_triangle(rng, 10, true, Lob::kLob2, "sq")});
  const PortfolioDataset mixed(pairs);

  const auto vp = temp_path("rt_values.csv");
  const auto pp = temp_path("rt_prem.csv");
  write_triangle_csv(mixed, vp, pp);
  const auto back = parse_triangle_csv(vp, CsvSchema::kLong, pp);
  REQUIRE(back.size() == mixed.size());
  for (std::size_t k = 0; k < mixed.size(); ++k) {
    for (Lob lob : {Lob::kLob1, Lob::kLob2}) {
      const auto& a = mixed[k][lob];
      const auto& b = back[k][lob];
      CHECK(a.company() == b.company());
      CHECK(a.shape() == b.shape());
      CHECK(a.cells() == b.cells());
      for (int i = 1; i <= a.origins(); ++i) CHECK(a.premium(i) == b.premium(i));
    }
  }
}

TEST_CASE("ingestion errors") {
  const auto prem = temp_path("prem.csv");
  std::string premiums = std::string(kPremiumHeader) + "\n";
  for (const char* lob : {"LOB1", "LOB2"})
    for (int i = 1; i <= 2; ++i) premiums += std::string("a,") + lob + "," + std::to_string(i) + ",100\n";
  write_file(prem, premiums);

  SUBCASE("missing cell in the required index set") {
    const auto p = temp_path("missing.csv");
    write_file(p, std::string(kLongHeader) + "\na,LOB1,1,1,5\na,LOB1,1,2,4\na,LOB2,1,1,5\na,LOB2,1,2,4\na,LOB2,2,1,3\n");
    CHECK_THROWS_AS(parse_triangle_csv(p, CsvSchema::kLong, prem), DataError);
  }
  SUBCASE("duplicate cell") {
    const auto p = temp_path("dup.csv");
    write_file(p, std::string(kLongHeader) + "\na,LOB1,1,1,5\na,LOB1,1,1,6\n");
    CHECK_THROWS_WITH_AS(parse_triangle_csv(p, CsvSchema::kLong, prem), doctest::Contains("duplicate"), DataError);
  }
  SUBCASE("non-positive premium") {
    const auto p = temp_path("ok.csv");
    write_file(p, std::string(kLongHeader) +
                      "\na,LOB1,1,1,5\na,LOB1,1,2,4\na,LOB1,2,1,3\na,LOB2,1,1,5\na,LOB2,1,2,4\na,LOB2,2,1,3\n");
    const auto bad = temp_path("bad_prem.csv");
    write_file(bad, std::string(kPremiumHeader) + "\na,LOB1,1,100\na,LOB1,2,0\na,LOB2,1,100\na,LOB2,2,100\n");
    CHECK_THROWS_WITH_AS(parse_triangle_csv(p, CsvSchema::kLong, bad), doctest::Contains("non-positive premium"),
                         DataError);
    CHECK(parse_triangle_csv(p, CsvSchema::kLong, prem).size() == 1);
  }
  SUBCASE("unparseable number") {
    const auto p = temp_path("nan.csv");
    write_file(p, std::string(kLongHeader) + "\na,LOB1,1,1,abc\n");
    CHECK_THROWS_AS(parse_triangle_csv(p, CsvSchema::kLong, prem), DataError);
  }
  SUBCASE("too few accident years") {
    CHECK_THROWS_AS(LossTriangle("x", Lob::kLob1, {1.0}, CellMap{{{1, 1}, 1.0}}), DataError);
  }
}

TEST_CASE("standardize divides by the exposure of the accident year") {
  const auto data = parse_triangle_csv(data_dir() / "appendix_wide.csv", CsvSchema::kWide);
  const auto y = standardize(data[0].lob1);
  CHECK(y.value(1, 1) == doctest::Approx(1376384.0 / 4711333.0).epsilon(1e-15));
  CHECK(y.value(1, 1) == doctest::Approx(0.2921432).epsilon(1e-7));

  std::mt19937_64 rng(3);
  auto t = random_triangle(rng, 6, false);
  CellMap cells = t.cells();
  const LossTriangle unit("u", Lob::kLob1, std::vector<double>(6, 1.0), cells);
  const auto yu = standardize(unit);
  for (const auto& [idx, v] : cells) CHECK(yu.value(idx.accident, idx.development) == v);
}

TEST_CASE("destandardize inverts standardize and standardize is linear") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(0.1, 50.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int origins = 2 + trial % 11;
    const auto t = random_triangle(rng, origins, trial % 2 == 0);
    const auto back = standardize(t).destandardize();
    for (const auto& [idx, v] : t.cells()) {
      const double w = back.value(idx.accident, idx.development);
      CHECK(std::abs(w - v) <= 1e-12 * std::max(1.0, std::abs(v)));
    }
    const double a = scale(rng);
    CellMap scaled;
    for (const auto& [idx, v] : t.cells()) scaled[idx] = a * v;
    const LossTriangle ta("c", Lob::kLob1, std::vector<double>(t.premiums().begin(), t.premiums().end()), scaled);
    const auto y = standardize(t);
    const auto ya = standardize(ta);
    for (const auto& [idx, v] : t.cells()) {
      (void)v;
      CHECK(ya.value(idx.accident, idx.development) ==
            doctest::Approx(a * y.value(idx.accident, idx.development)).epsilon(1e-13));
    }
  }
}

TEST_CASE("true reserve sums exactly the lower index set") {
  std::mt19937_64 rng(5);
  SUBCASE("zero lower triangle") {
    CellMap c1, c2;
    for (int i = 1; i <= 5; ++i)
      for (int j = 1; j <= 5; ++j) {
        c1[{i, j}] = in_upper(5, i, j) ? 10.0 : 0.0;
        c2[{i, j}] = in_upper(5, i, j) ? 3.0 : 0.0;
      }
    const TrianglePair p{LossTriangle("z", Lob::kLob1, std::vector<double>(5, 2.0), c1),
                         LossTriangle("z", Lob::kLob2, std::vector<double>(5, 2.0), c2)};
    const auto r = true_reserve(p);
    CHECK(r.lob1 == 0.0);
    CHECK(r.lob2 == 0.0);
    CHECK(r.total == 0.0);
  }
  SUBCASE("random squares against an independent double loop") {
    for (int trial = 0; trial < 20; ++trial) {
      const int origins = 2 + trial % 9;
      const TrianglePair p{random_triangle(rng, origins, true, Lob::kLob1, "r"),
                           random_triangle(rng, origins, true, Lob::kLob2, "r")};
      double expect[2] = {0.0, 0.0};
      int count = 0;
      for (int i = 1; i <= origins; ++i)
        for (int j = 1; j <= origins; ++j)
          if (i + j > origins + 1) {
            expect[0] += p.lob1.value(i, j);
            expect[1] += p.lob2.value(i, j);
            ++count;
          }
      CHECK(count == origins * (origins - 1) / 2);
      const auto r = true_reserve(p);
      CHECK(r.lob1 == doctest::Approx(expect[0]).epsilon(1e-14));
      CHECK(r.lob2 == doctest::Approx(expect[1]).epsilon(1e-14));
      CHECK(r.total == r.lob1 + r.lob2);
    }
  }
  SUBCASE("upper triangle is rejected") {
    const TrianglePair p{random_triangle(rng, 4, false, Lob::kLob1, "u"), random_triangle(rng, 4, false, Lob::kLob2, "u")};
    CHECK_THROWS_AS(true_reserve(p), DataError);
  }
}

TEST_CASE("portfolio invariants") {
  std::mt19937_64 rng(9);
  const TrianglePair a{random_triangle(rng, 4, false, Lob::kLob1, "a"), random_triangle(rng, 4, false, Lob::kLob2, "a")};
  const TrianglePair b{random_triangle(rng, 5, false, Lob::kLob1, "b"), random_triangle(rng, 5, false, Lob::kLob2, "b")};
  CHECK_THROWS_AS(PortfolioDataset({a, a}), DataError);
  CHECK_THROWS_AS(PortfolioDataset({a, b}), DataError);
  const TrianglePair mixed{random_triangle(rng, 4, false, Lob::kLob1, "m"),
                           random_triangle(rng, 5, false, Lob::kLob2, "m")};
  CHECK_THROWS_AS(PortfolioDataset({mixed}), DataError);
  const PortfolioDataset ok({a});
  CHECK(ok.index_of("a") == 0u);
  CHECK_FALSE(ok.index_of("b").has_value());
  CHECK_THROWS_AS(ok.at("b"), DataError);
}
