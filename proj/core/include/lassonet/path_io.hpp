#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace lassonet {

/// Shortest decimal form that round-trips the double (std::to_chars).
std::string format_double(double v);

/// Temp-file + rename so concurrent writers never interleave partial output.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

/// "# key: value" block used at the top of every result file.
std::string meta_header(const std::vector<std::pair<std::string, std::string>>& kv);

struct PathFileMeta {
  std::string tool_version;
  std::uint64_t seed = 0;
  std::uint64_t dataset_fingerprint = 0;
  std::string config_echo;
  std::string metric_name;  // "accuracy" or "mse"
  bool metric_higher_better = false;
};

/// One line of the path export: checkpoint scalars, the active set, and a
/// snapshot file reference.
struct PathRecord {
  double lambda = 0.0;
  std::size_t k_active = 0;
  std::vector<std::size_t> active;
  std::vector<std::string> active_names;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
  std::string snapshot_ref;
};

struct PathFileContent {
  PathFileMeta meta;
  std::vector<PathRecord> records;
};

std::string render_path_file(const PathFileMeta& meta, const std::vector<PathRecord>& records);
void write_path_file(const std::filesystem::path& path, const PathFileMeta& meta,
                     const std::vector<PathRecord>& records);
PathFileContent read_path_file(const std::filesystem::path& path);

}  // namespace lassonet
