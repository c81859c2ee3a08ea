#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lassonet/numeric.hpp"

namespace lassonet {

/// Parsed CSV before preprocessing. Missing cells (empty or "NA") are NaN
/// in `values`; a label column, when named, is pulled out as raw strings.
struct RawTable {
  Matrix values;  // n x d, NaN marks missing
  std::vector<std::string> feature_names;
  std::vector<std::string> labels_raw;  // empty when no label column
  std::size_t n_missing = 0;
};

/// label_column: header name (requires header) or 0-based column index as a
/// decimal string. Throws ParseError with row/column context on ragged rows
/// or non-numeric feature cells.
RawTable load_csv(const std::filesystem::path& path,
                  const std::optional<std::string>& label_column, bool header);

/// Replaces each missing cell with its column's non-missing mean.
RawTable impute_column_means(const RawTable& table);

enum class TaskKind { regression, classification, unsupervised };

struct Dataset {
  Matrix x;  // n x d, standardized with train statistics unless disabled
  TaskKind task = TaskKind::unsupervised;
  std::vector<int> labels;               // class indices (classification)
  Vector y;                              // targets (regression)
  std::vector<std::string> class_names;  // first-appearance order
  std::vector<std::string> feature_names;
  std::vector<std::size_t> train_idx, val_idx, test_idx;
  Vector feature_mean, feature_std;  // fitted on train rows only
  bool standardized = true;
  std::uint64_t fingerprint = 0;  // content hash of the raw table

  std::size_t n() const { return x.rows(); }
  std::size_t d() const { return x.cols(); }
  std::size_t n_classes() const { return class_names.size(); }

  Matrix x_rows(const std::vector<std::size_t>& idx) const;
  /// Targets for the given rows: class-index column, target column, or the
  /// row block itself in the unsupervised case.
  Matrix y_rows(const std::vector<std::size_t>& idx) const;
};

struct SplitFractions {
  double train = 0.7, val = 0.1, test = 0.2;
};

/// Deterministic shuffle + split + train-fitted standardization.
/// Stratified per class when requested; silently falls back (with a warning
/// on stderr) if some class has fewer than 3 samples.
Dataset split_standardize(const RawTable& table, SplitFractions fractions, bool stratify,
                          std::uint64_t seed, bool standardize = true);

/// FNV-1a over the parsed content; stable across whitespace differences.
std::uint64_t table_fingerprint(const RawTable& table);

}  // namespace lassonet
