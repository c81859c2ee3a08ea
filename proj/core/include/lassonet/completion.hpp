#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lassonet/numeric.hpp"
#include "lassonet/rng.hpp"
#include "lassonet/train.hpp"

namespace lassonet {

/// Observed-entry indicator over an m x n matrix.
struct ObservedMask {
  std::size_t rows = 0, cols = 0;
  std::vector<std::uint8_t> obs;  // row-major 0/1

  ObservedMask() = default;
  ObservedMask(std::size_t r, std::size_t c) : rows(r), cols(c), obs(r * c, 0) {}

  bool at(std::size_t i, std::size_t j) const { return obs[i * cols + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v = true) { obs[i * cols + j] = v ? 1 : 0; }
  std::size_t count() const;
  bool every_row_observed() const;
};

/// Observed entries copied, unobserved filled with the row's observed mean.
/// Throws ContractError when a row has no observed entry.
Matrix row_mean_init(const Matrix& z, const ObservedMask& mask);

/// result = z on the mask, x elsewhere.
Matrix project_observed(const Matrix& x, const Matrix& z, const ObservedMask& mask);

/// 0/1 weight matrix for masked losses.
Matrix mask_to_weights(const ObservedMask& mask);

/// Mean squared deviation over masked entries. Throws on an empty mask.
double masked_mse(const Matrix& a, const Matrix& b, const ObservedMask& mask);

/// Soft-threshold the singular values of a.
Matrix singular_value_threshold(const Matrix& a, double threshold);

/// Soft-Impute: iterate X <- SVT(P_obs(Z) + P_unobs(X)) until the relative
/// Frobenius change drops below 1e-5 or max_iter is reached.
Matrix soft_impute(const Matrix& z, const ObservedMask& mask, double threshold,
                   std::size_t max_iter);

struct SoftImputeSelection {
  double threshold = 0.0;
  Matrix x;
  double val_mse = 0.0;
};

/// Tunes the SVT threshold on validation entries over a 10-point logarithmic
/// grid spanning [0.01, 1] * sigma_1 of the zero-filled projection of z.
SoftImputeSelection select_soft_impute(const Matrix& z, const ObservedMask& train_mask,
                                       const ObservedMask& val_mask, std::size_t max_iter,
                                       std::size_t grid_points = 10);

struct ImputeResult {
  Path path;          // feature-selection path trained after convergence
  Matrix x_final;     // network reconstruction of the converged projection
  std::size_t outer_iterations = 0;
  bool converged = false;  // relative change fell below 1e-4
};

/// Alternating imputation: project onto the observed entries, train the
/// reconstruction net on them, re-impute, repeat; then run the group-prox
/// lambda path from the converged model. val_mask entries (known values kept
/// out of the training projection) drive early stopping; pass an empty mask
/// to rely on the relative-change rule alone. run_path=false skips the path
/// (plain reconstruction training).
ImputeResult lassonet_impute(const Matrix& z, const ObservedMask& train_mask,
                             const ObservedMask& val_mask, const TrainConfig& cfg,
                             bool run_path = true);

/// Random entry split: fractions of all m*n entries go to train/val, the rest
/// to test. Rows left without a train entry get one moved in, so the train
/// mask always satisfies the row-mean-init precondition.
struct EntrySplit {
  ObservedMask train, val, test;
};
EntrySplit split_entries(std::size_t rows, std::size_t cols, double train_fraction,
                         double val_fraction, std::uint64_t seed);

/// Mask file: '#' header lines, then one 0-indexed "row,col" pair per line.
void save_mask(const std::filesystem::path& path, const ObservedMask& mask,
               const std::string& header_block);
ObservedMask load_mask(const std::filesystem::path& path, std::size_t rows, std::size_t cols);

}  // namespace lassonet
