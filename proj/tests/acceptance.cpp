// Acceptance suite: one self-contained check per criterion, each printing a
// single PASS/FAIL line. Run everything or a single criterion with
// `acceptance --criterion N`. Exit status is nonzero when any executed
// criterion fails.
//
// Criteria 5 and 7 need the real Mice Protein dataset; they look for
// $LASSONET_MICE_CSV, then data/mice_protein.csv (see tools/fetch_mice.py),
// and fail with a "blocked" diagnostic when it is absent.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lassonet/completion.hpp"
#include "lassonet/data.hpp"
#include "lassonet/path_io.hpp"
#include "lassonet/svd.hpp"
#include "lassonet/train.hpp"
#include "prox_oracle.hpp"
#include "test_util.hpp"

#ifndef LASSONET_DATA_DIR
#define LASSONET_DATA_DIR "data"
#endif

using namespace lassonet;
using namespace lassonet::testing;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string numeric_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Dataset dataset_from_regression(const Matrix& x, const Vector& y, std::uint64_t seed) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < y.size(); ++i) labels.push_back(numeric_label(y[i]));
  return split_standardize(table_from(x, labels), {}, false, seed);
}

// ---------------------------------------------------------------- criterion 1

bool criterion_prox_oracle(std::ostream& log) {
  Rng rng(20260809);
  const double lambdas[] = {0.0, 0.1, 1.0};
  const double lambda_bars[] = {0.0, 0.3};
  const double ms[] = {0.1, 1.0, 10.0};
  double worst_gap = -1e300;
  for (int op = 0; op < 3; ++op) {
    for (int i = 0; i < 1000; ++i) {
      const std::size_t K = 1 + rng.next_index(6);
      ProxInput in;
      in.theta = Vector(op == 0 ? 1 : 1 + rng.next_index(4));
      for (std::size_t k = 0; k < in.theta.size(); ++k)
        in.theta[k] = rng.next_uniform(-3.0, 3.0);
      in.w = Vector(K);
      for (std::size_t k = 0; k < K; ++k) in.w[k] = rng.next_uniform(-3.0, 3.0);
      const ProxParams p(lambdas[rng.next_index(3)], ms[rng.next_index(3)],
                         op == 2 ? lambda_bars[rng.next_index(2)] : 0.0);
      ProxResult r;
      switch (op) {
        case 0: r = hier_prox(in, p); break;
        case 1: r = group_hier_prox(in, p); break;
        default: r = general_hier_prox(in, p); break;
      }
      if (linf_norm(r.w.span()) > p.m_hier * l2_norm(r.theta.span())) {
        log << "constraint violated (op " << op << ", instance " << i << ")";
        return false;
      }
      const double obj = prox_objective(in, p, r);
      const double oracle = prox_oracle(in, p, 512).objective;
      worst_gap = std::max(worst_gap, obj - oracle);
      if (obj > oracle + 1e-6) {
        log << "objective gap " << obj - oracle << " (op " << op << ", instance " << i << ")";
        return false;
      }
    }
  }
  log << "3000 instances, worst objective gap " << worst_gap;
  return true;
}

// ---------------------------------------------------------------- criterion 2

bool criterion_reductions(std::ostream& log) {
  Rng rng(77);
  // (a) lasso reduction, bitwise, including the K = 0 layout
  for (int i = 0; i < 200; ++i) {
    const double theta = rng.next_uniform(-4.0, 4.0);
    const double lam = rng.next_uniform(0.0, 3.0);
    const double m = (i % 3 == 0) ? 0.1 : (i % 3 == 1 ? 1.0 : 10.0);
    const std::size_t K = rng.next_index(4);  // 0..3
    const ProxResult r = hier_prox({Vector{theta}, Vector(K, 0.0)}, ProxParams(lam, m));
    if (r.theta[0] != soft_threshold(theta, lam)) {
      log << "lasso reduction mismatch at instance " << i;
      return false;
    }
    for (std::size_t k = 0; k < K; ++k)
      if (r.w[k] != 0.0) {
        log << "lasso reduction left w nonzero";
        return false;
      }
  }
  // (b) lambda_bar = 0: general == group to 1e-12 on 200 random instances
  for (int i = 0; i < 200; ++i) {
    ProxInput in;
    in.theta = Vector(1 + rng.next_index(4));
    for (std::size_t k = 0; k < in.theta.size(); ++k) in.theta[k] = rng.next_uniform(-3, 3);
    in.w = Vector(1 + rng.next_index(6));
    for (std::size_t k = 0; k < in.w.size(); ++k) in.w[k] = rng.next_uniform(-3, 3);
    const ProxParams p(rng.next_uniform(0.0, 1.0), rng.next_uniform(0.1, 10.0));
    const ProxResult a = general_hier_prox(in, p);
    const ProxResult b = group_hier_prox(in, p);
    for (std::size_t k = 0; k < a.theta.size(); ++k)
      if (std::fabs(a.theta[k] - b.theta[k]) > 1e-12) {
        log << "general/group theta mismatch at instance " << i;
        return false;
      }
    for (std::size_t k = 0; k < a.w.size(); ++k)
      if (std::fabs(a.w[k] - b.w[k]) > 1e-12) {
        log << "general/group w mismatch at instance " << i;
        return false;
      }
  }
  // (c) identity when lambda = lambda_bar = 0 and the constraint is strictly slack
  for (int i = 0; i < 200; ++i) {
    ProxInput in;
    in.theta = Vector(1 + rng.next_index(3));
    for (std::size_t k = 0; k < in.theta.size(); ++k)
      in.theta[k] = rng.next_uniform(0.5, 3.0) * (rng.next_double() < 0.5 ? -1 : 1);
    const double m = rng.next_uniform(0.2, 5.0);
    const double bound = m * l2_norm(in.theta.span());
    in.w = Vector(1 + rng.next_index(6));
    for (std::size_t k = 0; k < in.w.size(); ++k)
      in.w[k] = rng.next_uniform(-0.95, 0.95) * bound;
    const ProxResult r = general_hier_prox(in, ProxParams(0.0, m, 0.0));
    if (!(r.theta == in.theta) || !(r.w == in.w)) {
      log << "identity reduction not exact at instance " << i;
      return false;
    }
  }
  log << "lasso reduction bitwise, general==group to 1e-12, identity exact";
  return true;
}

// ---------------------------------------------------------------- criterion 3

bool criterion_gradients(std::ostream& log) {
  std::size_t tested = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; tested < 50; ++seed) {
    Rng rng(seed * 40503);
    const std::size_t mode = seed % 3;
    const std::vector<std::size_t> arch =
        mode == 2 ? std::vector<std::size_t>{4, 6, 4} : std::vector<std::size_t>{4, 6, 3};
    ResidualNet net = make_net(arch, rng);
    for (std::size_t i = 0; i < net.skip.size(); ++i)
      net.skip.data()[i] = rng.next_uniform(-1, 1);
    for (Layer& l : net.layers)
      for (std::size_t i = 0; i < l.b.size(); ++i) l.b[i] = rng.next_uniform(-0.5, 0.5);
    const Matrix x = rng_gaussian(rng, 5, 4, 0.0, 1.0);

    // resample when a pre-activation sits near the ReLU kink
    bool near_kink = false;
    {
      Matrix z = matmul(x, net.layers[0].w);
      for (std::size_t i = 0; i < z.rows() && !near_kink; ++i)
        for (std::size_t j = 0; j < z.cols(); ++j)
          if (std::fabs(z(i, j) + net.layers[0].b[j]) < 1e-3) {
            near_kink = true;
            break;
          }
    }
    if (near_kink) continue;

    Matrix y;
    LossKind kind;
    if (mode == 0) {
      kind = LossKind::squared_error;
      y = rng_gaussian(rng, 5, 3, 0.0, 1.0);
    } else if (mode == 1) {
      kind = LossKind::cross_entropy;
      y = Matrix(5, 1);
      for (std::size_t i = 0; i < 5; ++i) y(i, 0) = static_cast<double>(rng.next_index(3));
    } else {
      kind = LossKind::reconstruction_frobenius;
      y = x;
    }

    const Gradients g = backward(net, x, y, kind);
    const std::vector<double> bp = flatten_grads(g);
    const std::vector<double> fd = finite_difference_gradient(
        net, [&](const ResidualNet& m) { return loss(m, x, y, kind); }, 1e-5);
    for (std::size_t i = 0; i < bp.size(); ++i) {
      const double denom = std::max({std::fabs(bp[i]), std::fabs(fd[i]), 1e-4});
      worst = std::max(worst, std::fabs(bp[i] - fd[i]) / denom);
    }
    ++tested;
  }
  log << "50 nets, max relative error " << worst;
  return worst <= 1e-5;
}

// ---------------------------------------------------------------- criterion 4

TrainConfig boston_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.hidden_sizes = {26};
  cfg.dense_epochs = 1000;
  cfg.epochs_b = 20;
  cfg.path_multiplier = 0.02;
  cfg.hierarchy_m = 10.0;
  return cfg;
}

bool criterion_support_recovery(std::ostream& log) {
  std::vector<double> hits;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LinearSynthetic synth = make_boston_style(seed);
    const Dataset ds = dataset_from_regression(synth.x, synth.y, seed);
    const TrainProblem pr = make_problem(ds);
    const TrainConfig cfg = boston_config(seed);
    const ResidualNet dense = train_dense(init_net(arch_for(pr, cfg), cfg), pr, cfg);
    const Path path = train_path(dense, pr, cfg, false, ds.fingerprint);

    // checkpoint with 13 active features (nearest k when 13 is skipped)
    const PathCheckpoint* at13 = nullptr;
    for (const auto& ck : path.checkpoints) {
      if (!at13 ||
          std::llabs(static_cast<long long>(ck.k_active) - 13) <
              std::llabs(static_cast<long long>(at13->k_active) - 13) ||
          (std::llabs(static_cast<long long>(ck.k_active) - 13) ==
               std::llabs(static_cast<long long>(at13->k_active) - 13) &&
           ck.k_active > at13->k_active))
        at13 = &ck;
    }
    std::size_t inter = 0;
    for (std::size_t j : at13->active_set)
      if (j < 13) ++inter;
    hits.push_back(static_cast<double>(inter));
    log << "seed " << seed << ": k=" << at13->k_active << " true=" << inter << "; ";
  }
  const double med = median(hits);
  log << "median true features " << med;
  return med >= 10.0;
}

// ---------------------------------------------------------------- criterion 5

std::optional<std::filesystem::path> mice_csv() {
  namespace fs = std::filesystem;
  if (const char* env = std::getenv("LASSONET_MICE_CSV")) {
    if (fs::exists(env)) return fs::path(env);
  }
  const fs::path local = fs::path(LASSONET_DATA_DIR) / "mice_protein.csv";
  if (fs::exists(local)) return local;
  return std::nullopt;
}

bool criterion_mice_refit(std::ostream& log) {
  const auto csv = mice_csv();
  if (!csv) {
    log << "BLOCKED: Mice Protein dataset unavailable (no network in this environment); "
           "fetch with tools/fetch_mice.py into data/mice_protein.csv or set "
           "LASSONET_MICE_CSV";
    return false;
  }
  RawTable table = load_csv(*csv, std::string("class"), true);
  if (table.values.cols() != 77)
    log << "note: expected 77 protein columns, got " << table.values.cols() << "; ";
  if (table.n_missing > 0) table = impute_column_means(table);
  const Dataset ds = split_standardize(table, {0.7, 0.1, 0.2}, true, 1);
  const TrainProblem pr = make_problem(ds);

  TrainConfig cfg;
  cfg.seed = 1;
  cfg.hidden_sizes = {77};
  cfg.dense_epochs = 1000;
  cfg.epochs_b = 20;
  cfg.path_multiplier = 0.02;
  cfg.hierarchy_m = 10.0;

  const ResidualNet dense = train_dense(init_net(arch_for(pr, cfg), cfg), pr, cfg);
  const Path path = train_path(dense, pr, cfg, true, ds.fingerprint);

  const PathCheckpoint* chosen = nullptr;
  for (const auto& ck : path.checkpoints) {
    if (ck.k_active < 1 || ck.k_active > 50) continue;
    if (!chosen || ck.val_metric > chosen->val_metric ||
        (ck.val_metric == chosen->val_metric && ck.k_active < chosen->k_active))
      chosen = &ck;
  }
  if (!chosen) {
    log << "no checkpoint with k <= 50";
    return false;
  }
  TrainConfig refit_cfg = cfg;
  const ResidualNet refit = refit_debiased(*chosen, pr, refit_cfg);
  const Matrix x_test = zero_excluded_columns(pr.x_test, chosen->active_set);
  const double acc = accuracy(refit, x_test, pr.y_test);
  log << "k=" << chosen->k_active << ", refit test accuracy " << acc << " (need >= 0.93)";
  return acc >= 0.93;
}

// ---------------------------------------------------------------- criterion 6

double best_test_mse(const Path& path, const TrainProblem& pr) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ck : path.checkpoints)
    best = std::min(best, loss(ck.model, pr.x_test, pr.y_test, LossKind::squared_error));
  return best;
}

bool criterion_dense_to_sparse(std::ostream& log) {
  std::vector<double> d2s, s2d;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LinearSynthetic synth = make_boston_style(seed);
    const Dataset ds = dataset_from_regression(synth.x, synth.y, seed);
    const TrainProblem pr = make_problem(ds);
    const TrainConfig cfg = boston_config(seed);

    const ResidualNet dense = train_dense(init_net(arch_for(pr, cfg), cfg), pr, cfg);
    const Path down = train_path(dense, pr, cfg, false, ds.fingerprint);
    d2s.push_back(best_test_mse(down, pr));

    const double lambda_lo = down.checkpoints.front().lambda;
    const double lambda_hi = down.checkpoints.back().lambda;
    const Path up = train_path_sparse_to_dense(pr, cfg, false, lambda_hi, lambda_lo);
    s2d.push_back(best_test_mse(up, pr));
  }
  const double med_down = median(d2s), med_up = median(s2d);
  log << "median best-path test MSE dense-to-sparse " << med_down << " vs sparse-to-dense "
      << med_up;
  return med_down <= med_up;
}

// ---------------------------------------------------------------- criterion 7

bool criterion_completion(std::ostream& log) {
  const auto csv = mice_csv();
  if (!csv) {
    log << "BLOCKED: Mice Protein dataset unavailable (no network in this environment); "
           "fetch with tools/fetch_mice.py into data/mice_protein.csv or set "
           "LASSONET_MICE_CSV";
    return false;
  }
  RawTable table = load_csv(*csv, std::string("class"), true);
  if (table.n_missing > 0) table = impute_column_means(table);
  // per-column standardization keeps the entry MSE comparable across proteins
  Matrix z = table.values;
  for (std::size_t j = 0; j < z.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) mean += z(i, j);
    mean /= static_cast<double>(z.rows());
    double ss = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) ss += (z(i, j) - mean) * (z(i, j) - mean);
    double sd = std::sqrt(ss / static_cast<double>(z.rows()));
    if (sd == 0.0) sd = 1.0;
    for (std::size_t i = 0; i < z.rows(); ++i) z(i, j) = (z(i, j) - mean) / sd;
  }

  int net_wins = 0;
  std::vector<double> net_mses, soft_mses;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const EntrySplit split = split_entries(z.rows(), z.cols(), 0.8, 0.1, seed);
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.hidden_sizes = {25, 25};  // two hidden layers, d/3 grid point
    cfg.dense_epochs = 60;
    cfg.learning_rate = 1e-2;
    cfg.patience = 10;
    const ImputeResult net = lassonet_impute(z, split.train, split.val, cfg, false);
    const SoftImputeSelection soft = select_soft_impute(z, split.train, split.val, 60);
    const double net_mse = masked_mse(net.x_final, z, split.test);
    const double soft_mse = masked_mse(soft.x, z, split.test);
    net_mses.push_back(net_mse);
    soft_mses.push_back(soft_mse);
    if (net_mse <= soft_mse) ++net_wins;
  }
  log << "median test MSE lassonet " << median(net_mses) << " vs soft-impute "
      << median(soft_mses) << " (net wins " << net_wins << "/5)";
  return median(net_mses) <= median(soft_mses);
}

// ---------------------------------------------------------------- criterion 8

bool criterion_path_mechanics(std::ostream& log) {
  const LinearSynthetic synth = make_linear_synthetic(3, 160, 10, 3, 10.0);
  const Dataset ds = dataset_from_regression(synth.x, synth.y, 3);
  const TrainProblem pr = make_problem(ds);
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.hidden_sizes = {8};
  cfg.dense_epochs = 300;
  cfg.epochs_b = 10;
  cfg.path_multiplier = 0.05;

  const ResidualNet dense = train_dense(init_net(arch_for(pr, cfg), cfg), pr, cfg);
  const Path a = train_path(dense, pr, cfg, false, ds.fingerprint);
  const Path b = train_path(dense, pr, cfg, false, ds.fingerprint);

  for (const auto& ck : a.checkpoints) {
    if (!hierarchy_feasible(ck.model, cfg.hierarchy_m)) {
      log << "hierarchy violated at lambda " << ck.lambda;
      return false;
    }
  }
  for (std::size_t i = 0; i + 1 < a.checkpoints.size(); ++i) {
    if (a.checkpoints[i + 1].lambda !=
        a.checkpoints[i].lambda * (1.0 + cfg.path_multiplier)) {
      log << "lambda schedule not geometric at step " << i;
      return false;
    }
  }
  if (a.checkpoints.back().k_active != 0) {
    log << "path did not terminate at k=0";
    return false;
  }
  // byte-identical rerun: serialize both paths and compare
  auto render = [&](const Path& p) {
    PathFileMeta meta;
    meta.tool_version = "acceptance";
    meta.seed = cfg.seed;
    meta.dataset_fingerprint = ds.fingerprint;
    meta.config_echo = config_echo(cfg);
    meta.metric_name = "mse";
    meta.metric_higher_better = false;
    std::vector<PathRecord> records;
    for (const auto& ck : p.checkpoints)
      records.push_back({ck.lambda, ck.k_active, ck.active_set, {}, ck.train_loss,
                         ck.val_loss, ck.val_metric, ""});
    return render_path_file(meta, records);
  };
  if (render(a) != render(b)) {
    log << "rerun not byte-identical";
    return false;
  }
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i)
    if (!(a.checkpoints[i].model == b.checkpoints[i].model)) {
      log << "rerun models differ at checkpoint " << i;
      return false;
    }
  log << a.checkpoints.size() << " checkpoints: feasible, geometric, terminated, reproducible";
  return true;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::ostream&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }

  const std::vector<Criterion> criteria{
      {1, "prox-oracle equivalence", criterion_prox_oracle},
      {2, "operator reductions", criterion_reductions},
      {3, "gradient correctness", criterion_gradients},
      {4, "support recovery", criterion_support_recovery},
      {5, "mice protein k=50 refit accuracy", criterion_mice_refit},
      {6, "dense-to-sparse dominance", criterion_dense_to_sparse},
      {7, "matrix completion vs soft-impute", criterion_completion},
      {8, "path mechanics", criterion_path_mechanics},
  };

  bool all_ok = true;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    std::ostringstream log;
    bool ok = false;
    try {
      ok = c.fn(log);
    } catch (const std::exception& e) {
      log << "exception: " << e.what();
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << " (" << c.name
              << "): " << log.str() << std::endl;
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
