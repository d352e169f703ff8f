#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lossres/triangle.hpp"

namespace lossres::resample {

/// Ordered reserve draws from one generator run. `replication` keeps the original
/// index of each kept draw, so dropped replications leave visible gaps.
struct ReserveDistribution {
  std::string generator;
  std::string company;
  std::uint64_t seed = 0;
  int requested = 0;
  int failures = 0;
  std::vector<int> replication;
  std::vector<Reserves> draws;

  std::vector<double> lob1() const;
  std::vector<double> lob2() const;
  std::vector<double> total() const;
  nlohmann::json metadata() const;
};

/// Gathers per-replication slots in index order; empty slots count as failures.
ReserveDistribution collect_replications(std::string generator, std::uint64_t seed,
                                         const std::vector<std::optional<Reserves>>& slots);

/// Writes `replication,R1,R2,R` rows and, next to it, `<stem>.json` metadata.
void write_distribution(const ReserveDistribution& dist, const std::filesystem::path& csv_path);
/// Reads the CSV; metadata is taken from the sidecar JSON when present.
ReserveDistribution read_distribution(const std::filesystem::path& csv_path);

}  // namespace lossres::resample
