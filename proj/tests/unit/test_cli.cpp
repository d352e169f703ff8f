#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;
using lossres::cli::run;

namespace {

const std::string kData = std::string(LOSSRES_DATA_DIR) + "/appendix_wide.csv";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lossres_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("sha256 matches the standard test vectors") {
  const fs::path dir = scratch("sha");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "abc", std::ios::binary) << "abc";
    std::ofstream(dir / "empty", std::ios::binary);
  }
  CHECK(lossres::cli::sha256_file(dir / "abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(lossres::cli::sha256_file(dir / "empty") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("usage errors exit 2 and runtime errors exit 1") {
  const fs::path dir = scratch("codes");
  CHECK(run({}) == 2);
  CHECK(run({"no-such-command"}) == 2);
  CHECK(run({"--help"}) == 0);
  CHECK(run({"bootstrap", "--data", kData, "--out", dir.string()}) == 2);  // seed is required
  CHECK(run({"fit-copula", "--data", "/nonexistent.csv", "--out", dir.string()}) == 2);
  CHECK(run({"fit-copula", "--data", kData, "--copula", "bogus", "--out", dir.string()}) == 2);
  CHECK(run({"risk", "--dist", kData, "--levels", "abc", "--out", dir.string()}) == 1);
  CHECK(run({"fit-copula", "--data", kData, "--company", "nobody", "--out", dir.string()}) == 1);
}

TEST_CASE("fit-copula reproduces the published Gaussian dependence estimate") {
  const fs::path dir = scratch("fit");
  REQUIRE(run({"fit-copula", "--data", kData, "--copula", "gaussian", "--out", dir.string()}) == 0);
  std::ifstream in(dir / "fit.json");
  const auto fit = nlohmann::json::parse(in);
  double theta = 0.0;
  for (const auto& p : fit.at("parameters"))
    if (p.at("name") == "copula.theta") theta = p.at("estimate").get<double>();
  CHECK(std::abs(theta + 0.3656) < 5e-4);
  CHECK(fs::exists(dir / "reserves.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("risk writes one row per requested level") {
  const fs::path boot = scratch("boot");
  const fs::path risk = scratch("risk");
  REQUIRE(run({"bootstrap", "--data", kData, "-B", "100", "--seed", "3", "--out", boot.string()}) == 0);
  REQUIRE(run({"risk", "--dist", (boot / "distribution.csv").string(), "--levels", "80,85,90,95,99", "--out",
               risk.string()}) == 0);
  const auto lines = read_lines(risk / "risk.csv");
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "level,var,tvar,risk_capital,silo_risk_capital,gain");
  CHECK(lines[1].rfind("0.8,", 0) == 0);
  CHECK(lines[5].rfind("0.99,", 0) == 0);
}

TEST_CASE("replay reproduces outputs byte for byte and detects changed inputs") {
  const fs::path first = scratch("replay_a");
  const fs::path second = scratch("replay_b");
  const fs::path third = scratch("replay_c");
  REQUIRE(run({"bootstrap", "--data", kData, "--copula", "gaussian", "-B", "60", "--seed", "11", "--workers", "2",
               "--out", first.string()}) == 0);
  REQUIRE(run({"replay", "--manifest", (first / "manifest.json").string(), "--out", second.string()}) == 0);
  for (const char* f : {"distribution.csv", "distribution.json", "summary.json"})
    CHECK(slurp(first / f) == slurp(second / f));

  // A manifest whose recorded output hash is wrong must fail the replay.
  std::ifstream in(first / "manifest.json");
  auto manifest = nlohmann::json::parse(in);
  manifest["outputs"][0]["sha256"] = std::string(64, '0');
  const fs::path tampered = first / "tampered.json";
  std::ofstream(tampered) << manifest.dump(2);
  CHECK(run({"replay", "--manifest", tampered.string(), "--out", third.string()}) == 1);
}
