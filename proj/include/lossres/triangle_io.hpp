#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "lossres/triangle.hpp"

namespace lossres {

/// `long`: company,lob,accident_year,dev_year,value plus a separate premium file
///         company,lob,accident_year,premium (canonical persistence form).
/// `wide`: company,lob,accident_year,premium,1,...,I with blank lower cells
///         (ingestion only; accident_year may be a calendar label).
enum class CsvSchema { kLong, kWide };

inline constexpr const char* kLongHeader = "company,lob,accident_year,dev_year,value";
inline constexpr const char* kPremiumHeader = "company,lob,accident_year,premium";

PortfolioDataset parse_triangle_csv(const std::filesystem::path& path, CsvSchema schema,
                                    const std::optional<std::filesystem::path>& premium_path = std::nullopt);

void write_triangle_csv(const PortfolioDataset& data, const std::filesystem::path& values_path,
                        const std::filesystem::path& premium_path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace lossres
