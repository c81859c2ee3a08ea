#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lassonet/data.hpp"
#include "lassonet/network.hpp"
#include "lassonet/prox.hpp"

namespace lassonet {

enum class DenseOptimizer { adam };
enum class PathOptimizer { sgd_momentum };

struct TrainConfig {
  std::size_t epochs_b = 20;        // B: epochs per lambda block on the path
  std::size_t dense_epochs = 1000;  // epoch cap for the dense and refit phases
  double learning_rate = 1e-3;      // alpha; also scales the prox penalty
  double momentum = 0.9;
  DenseOptimizer dense_optimizer = DenseOptimizer::adam;
  PathOptimizer path_optimizer = PathOptimizer::sgd_momentum;
  double path_multiplier = 0.02;       // epsilon
  double hierarchy_m = 10.0;           // M
  std::optional<double> lambda_start;  // empty = search with auto_lambda_start
  std::size_t patience = 10;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_sizes{};  // hidden widths; {0} is the linear-only model

  void validate() const;
};

/// Canonical key=value;... echo, stable across runs for a fixed config.
std::string config_echo(const TrainConfig& cfg);

/// Training views of a dataset. y_* is a class-index column (cross_entropy),
/// a target column (squared_error) or the reconstruction target itself.
/// The optional masks restrict reconstruction losses to observed entries.
struct TrainProblem {
  Matrix x_train, y_train;
  Matrix x_val, y_val;
  Matrix x_test, y_test;
  LossKind kind = LossKind::squared_error;
  bool metric_higher_better = false;
  const Matrix* train_mask = nullptr;
  const Matrix* val_mask = nullptr;
  const Matrix* test_mask = nullptr;

  bool has_val() const { return x_val.rows() > 0; }
};

TrainProblem make_problem(const Dataset& ds);

struct PathCheckpoint {
  double lambda = 0.0;
  std::size_t k_active = 0;
  std::vector<std::size_t> active_set;
  ResidualNet model;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
};

struct Path {
  std::vector<PathCheckpoint> checkpoints;
  TrainConfig config;
  std::uint64_t dataset_fingerprint = 0;
  bool metric_higher_better = false;
};

/// Fresh network for this config (He-uniform hidden layers, zero skip),
/// deterministic in cfg.seed. All phases that need a new model use this.
ResidualNet init_net(const std::vector<std::size_t>& arch, const TrainConfig& cfg);

/// arch = (d, cfg.hidden_sizes..., k_out) for the given problem.
std::vector<std::size_t> arch_for(const TrainProblem& problem, const TrainConfig& cfg);

/// Features with a nonzero skip row.
std::vector<std::size_t> active_features(const ResidualNet& net);

/// Exact hierarchy check: ||W^(1)_j||_inf <= m_hier * ||theta_j||_2 for all j.
bool hierarchy_feasible(const ResidualNet& net, double m_hier);

/// Fraction of rows whose argmax output equals the label column.
double accuracy(const ResidualNet& net, const Matrix& x, const Matrix& labels);

/// Validation metric consistent with the problem kind: accuracy for
/// cross-entropy, mean squared error otherwise (masked when a mask applies).
double metric_of(const TrainProblem& problem, const ResidualNet& net, const Matrix& x,
                 const Matrix& y, const Matrix* mask = nullptr);
double validation_metric(const TrainProblem& problem, const ResidualNet& net);
bool metric_improves(bool higher_better, double candidate, double incumbent);

/// Zero out every column not in the active set (debiased-refit ingestion rule).
Matrix zero_excluded_columns(const Matrix& x, const std::vector<std::size_t>& active);

/// Unconstrained Adam training with early stopping on validation loss;
/// returns the best-validation snapshot. cfg.dense_epochs == 0 returns the
/// input net unchanged. Throws NumericalError if the loss diverges.
ResidualNet train_dense(const ResidualNet& net, const TrainProblem& problem,
                        const TrainConfig& cfg);

/// Doubling search from 1e-8 * mean|theta| for the largest lambda at which
/// one epoch of proximal training drops no active feature, backed off by a
/// fixed safety factor so the path starts well inside the all-features
/// regime and sheds features gradually.
double auto_lambda_start(const ResidualNet& dense_net, const TrainProblem& problem,
                         const TrainConfig& cfg, bool grouped);

/// Dense-to-sparse regularization path: warm-started SGD-momentum epochs with
/// the hierarchical prox applied after every step, lambda growing by (1+eps)
/// until no feature stays active. grouped selects the row-group operator
/// (multi-output skip) over the scalar one.
Path train_path(const ResidualNet& dense_net, const TrainProblem& problem,
                const TrainConfig& cfg, bool grouped, std::uint64_t dataset_fingerprint = 0);

/// Ablation: same block structure but starting from a fresh (untrained) net at
/// lambda_hi and dividing by (1+eps) down to lambda_lo.
Path train_path_sparse_to_dense(const TrainProblem& problem, const TrainConfig& cfg,
                                bool grouped, double lambda_hi, double lambda_lo);

/// Retrain from scratch on the checkpoint's active features (all other input
/// columns zeroed), unpenalized and unconstrained.
ResidualNet refit_debiased(const PathCheckpoint& checkpoint, const TrainProblem& problem,
                           const TrainConfig& cfg);

/// Dense-trains one model per candidate first-layer width (in parallel, capped
/// by LASSONET_THREADS) and returns cfg with the best width by validation
/// metric. Ties keep the earlier size in the list.
TrainConfig hidden_size_sweep(const TrainProblem& problem, const TrainConfig& cfg,
                              const std::vector<std::size_t>& sizes);

/// Worker cap from LASSONET_THREADS (>= 1); defaults to hardware concurrency.
std::size_t thread_cap();

}  // namespace lassonet
