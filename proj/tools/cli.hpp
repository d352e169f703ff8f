#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lossres::cli {

/// Runs one command line (without the program name). Returns 0 on success,
/// 2 on a usage error and 1 on a runtime failure; diagnostics go to stderr.
int run(const std::vector<std::string>& args);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace lossres::cli
