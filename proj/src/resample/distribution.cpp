#include "lossres/resample/distribution.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lossres/error.hpp"
#include "lossres/triangle_io.hpp"

namespace lossres::resample {

std::vector<double> ReserveDistribution::lob1() const {
  std::vector<double> out;
  for (const auto& r : draws) out.push_back(r.lob1);
  return out;
}

std::vector<double> ReserveDistribution::lob2() const {
  std::vector<double> out;
  for (const auto& r : draws) out.push_back(r.lob2);
  return out;
}

std::vector<double> ReserveDistribution::total() const {
  std::vector<double> out;
  for (const auto& r : draws) out.push_back(r.total);
  return out;
}

ReserveDistribution collect_replications(std::string generator, std::uint64_t seed,
                                         const std::vector<std::optional<Reserves>>& slots) {
  ReserveDistribution dist;
  dist.generator = std::move(generator);
  dist.seed = seed;
  dist.requested = static_cast<int>(slots.size());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (!slots[k]) {
      ++dist.failures;
      continue;
    }
    dist.replication.push_back(static_cast<int>(k));
    dist.draws.push_back(*slots[k]);
  }
  return dist;
}

nlohmann::json ReserveDistribution::metadata() const {
  nlohmann::json j = {{"generator", generator},
          {"seed", seed},
          {"B", requested},
          {"kept", draws.size()},
          {"failures", failures}};
  if (!company.empty()) j["company"] = company;
  return j;
}

void write_distribution(const ReserveDistribution& dist, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << "replication,R1,R2,R\n";
  for (std::size_t k = 0; k < dist.draws.size(); ++k) {
    const auto& r = dist.draws[k];
    out << dist.replication[k] << ',' << format_double(r.lob1) << ',' << format_double(r.lob2) << ','
        << format_double(r.total) << '\n';
  }
  auto meta_path = csv_path;
  meta_path.replace_extension(".json");
  std::ofstream meta(meta_path, std::ios::binary);
  meta << dist.metadata().dump(2) << '\n';
}

ReserveDistribution read_distribution(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open " + csv_path.string());
  ReserveDistribution dist;
  std::string line;
  if (!std::getline(in, line) || line != "replication,R1,R2,R")
    throw DataError(csv_path.string() + ": missing header 'replication,R1,R2,R'");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4) throw DataError(csv_path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    double v[3];
    int rep = 0;
    auto bad = [&] { return DataError(csv_path.string() + ":" + std::to_string(line_no) + ": malformed number"); };
    if (std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), rep).ec != std::errc()) throw bad();
    for (int c = 0; c < 3; ++c) {
      const auto& s = fields[static_cast<std::size_t>(c + 1)];
      if (std::from_chars(s.data(), s.data() + s.size(), v[c]).ec != std::errc()) throw bad();
    }
    dist.replication.push_back(rep);
    dist.draws.push_back(Reserves{v[0], v[1], v[2]});
  }
  dist.requested = static_cast<int>(dist.draws.size());
  auto meta_path = csv_path;
  meta_path.replace_extension(".json");
  if (std::filesystem::exists(meta_path)) {
    std::ifstream m(meta_path);
    const auto j = nlohmann::json::parse(m);
    dist.generator = j.value("generator", "");
    dist.seed = j.value("seed", std::uint64_t{0});
    dist.requested = j.value("B", dist.requested);
    dist.failures = j.value("failures", 0);
    dist.company = j.value("company", "");
  }
  return dist;
}

}  // namespace lossres::resample
