#pragma once

// Output files: atomic writes, CSV tables, SHA-256 checksums and the run
// manifest.

#include "dynrecon/systems.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dynrecon::experiment {

namespace fs = std::filesystem;

/// Writes to a temporary sibling, then renames over `path`.
void write_atomic(const fs::path& path, const std::string& contents);

/// Shortest round-trip decimal form.
std::string format_number(double value);

/// Comma-separated table with a header row; each column has one value per row.
std::string csv_table(const std::vector<std::string>& header, const std::vector<Vec>& columns);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const fs::path& path);

/// Collects written files and emits manifest.json at the end of a run.
class Manifest {
  public:
    Manifest(fs::path directory, std::string command, nlohmann::json config);

    const fs::path& directory() const { return directory_; }
    /// Writes `contents` atomically to directory/name and records its checksum.
    void write(const std::string& name, const std::string& contents);
    void finish(double wall_seconds);

    const nlohmann::json& files() const { return files_; }

  private:
    fs::path directory_;
    std::string command_;
    nlohmann::json config_;
    nlohmann::json files_ = nlohmann::json::array();
};

}  // namespace dynrecon::experiment
