#include "lassonet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "lassonet/errors.hpp"
#include "lassonet/path_io.hpp"

namespace lassonet {

namespace {

constexpr std::uint64_t kInitStream = 0x1A55;
constexpr std::uint64_t kDenseStream = 0xDE45E;
constexpr std::uint64_t kPathStream = 0x9A7;
constexpr std::uint64_t kRefitStream = 0x4EF1;

constexpr std::size_t kFullBatchLimit = 4096;  // path phase uses full gradients below this
constexpr double kStartBackoff = 1024.0;       // path start below the first-drop boundary

struct ParamView {
  double* p;
  std::size_t n;
};

std::vector<ParamView> param_views(ResidualNet& net) {
  std::vector<ParamView> v;
  v.push_back({net.skip.data(), net.skip.size()});
  for (Layer& l : net.layers) {
    v.push_back({l.w.data(), l.w.size()});
    v.push_back({l.b.data(), l.b.size()});
  }
  return v;
}

std::vector<ParamView> grad_views(Gradients& g) {
  std::vector<ParamView> v;
  v.push_back({g.d_skip.data(), g.d_skip.size()});
  for (Layer& l : g.d_layers) {
    v.push_back({l.w.data(), l.w.size()});
    v.push_back({l.b.data(), l.b.size()});
  }
  return v;
}

Matrix take_rows(const Matrix& src, const std::vector<std::size_t>& idx, std::size_t begin,
                 std::size_t end) {
  Matrix out(end - begin, src.cols());
  for (std::size_t i = begin; i < end; ++i)
    std::memcpy(out.data() + (i - begin) * src.cols(), src.data() + idx[i] * src.cols(),
                src.cols() * sizeof(double));
  return out;
}

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::size_t t = 0;

  explicit AdamState(const std::vector<ParamView>& params) {
    for (const auto& pv : params) {
      m.emplace_back(pv.n, 0.0);
      v.emplace_back(pv.n, 0.0);
    }
  }

  void step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads,
            double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].n; ++i) {
        const double g = grads[k].p[i];
        m[k][i] = b1 * m[k][i] + (1.0 - b1) * g;
        v[k][i] = b2 * v[k][i] + (1.0 - b2) * g * g;
        params[k].p[i] -= lr * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + eps);
      }
    }
  }
};

struct MomentumState {
  std::vector<std::vector<double>> vel;

  explicit MomentumState(const std::vector<ParamView>& params) {
    for (const auto& pv : params) vel.emplace_back(pv.n, 0.0);
  }

  void step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads,
            double lr, double mu) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].n; ++i) {
        vel[k][i] = mu * vel[k][i] + grads[k].p[i];
        params[k].p[i] -= lr * vel[k][i];
      }
    }
  }
};

double train_loss_of(const TrainProblem& pr, const ResidualNet& net) {
  return loss(net, pr.x_train, pr.y_train, pr.kind, pr.train_mask);
}

double val_loss_of(const TrainProblem& pr, const ResidualNet& net) {
  return loss(net, pr.x_val, pr.y_val, pr.kind, pr.val_mask);
}

void check_finite_loss(double value, const char* phase) {
  if (!std::isfinite(value))
    throw NumericalError(std::string(phase) + ": loss diverged (non-finite)");
}

// One proximal-gradient epoch: SGD-momentum step(s) followed by the
// hierarchical prox at penalty alpha*lambda. Full-batch when the train set
// is small, otherwise per-batch with the prox after every step.
void path_epoch(ResidualNet& net, MomentumState& mom, const TrainProblem& pr,
                const TrainConfig& cfg, double lambda, bool grouped, Rng& shuffle_rng) {
  auto params = param_views(net);
  const ProxParams prox(cfg.learning_rate * lambda, cfg.hierarchy_m);
  const std::size_t n = pr.x_train.rows();

  auto step_and_prox = [&](const Matrix& xb, const Matrix& yb, const Matrix* mb) {
    BackpropOut bp = loss_and_backward(net, xb, yb, pr.kind, mb);
    check_finite_loss(bp.loss, "train_path");
    auto grads = grad_views(bp.grads);
    mom.step(params, grads, cfg.learning_rate, cfg.momentum);
    ProxAllResult pres = apply_prox_all_features(net.skip, net.layers.front().w, prox, grouped);
    net.skip = std::move(pres.theta);
    net.layers.front().w = std::move(pres.w1);
    params = param_views(net);
  };

  if (n <= kFullBatchLimit) {
    step_and_prox(pr.x_train, pr.y_train, pr.train_mask);
    return;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle_rng.shuffle(order);
  for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
    const std::size_t end = std::min(begin + cfg.batch_size, n);
    Matrix xb = take_rows(pr.x_train, order, begin, end);
    Matrix yb = take_rows(pr.y_train, order, begin, end);
    Matrix mb;
    const Matrix* mbp = nullptr;
    if (pr.train_mask) {
      mb = take_rows(*pr.train_mask, order, begin, end);
      mbp = &mb;
    }
    step_and_prox(xb, yb, mbp);
  }
}

PathCheckpoint make_checkpoint(const ResidualNet& net, const TrainProblem& pr, double lambda) {
  PathCheckpoint ck;
  ck.lambda = lambda;
  ck.active_set = active_features(net);
  ck.k_active = ck.active_set.size();
  ck.model = net;
  ck.train_loss = train_loss_of(pr, net);
  ck.val_loss = pr.has_val() ? val_loss_of(pr, net) : std::numeric_limits<double>::quiet_NaN();
  ck.val_metric = pr.has_val() ? validation_metric(pr, net) : std::numeric_limits<double>::quiet_NaN();
  return ck;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs_b == 0) throw ContractError("TrainConfig: epochs_b must be positive");
  if (!(learning_rate > 0.0)) throw ContractError("TrainConfig: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ContractError("TrainConfig: momentum must be in [0, 1)");
  if (!(path_multiplier > 0.0))
    throw ContractError("TrainConfig: path_multiplier must be positive");
  if (!(hierarchy_m > 0.0)) throw ContractError("TrainConfig: hierarchy_m must be positive");
  if (lambda_start && !(*lambda_start > 0.0))
    throw ContractError("TrainConfig: lambda_start must be positive when given");
  if (batch_size == 0) throw ContractError("TrainConfig: batch_size must be positive");
  if (hidden_sizes.empty()) throw ContractError("TrainConfig: hidden_sizes must be set");
}

std::string config_echo(const TrainConfig& cfg) {
  std::ostringstream os;
  os << "epochs_b=" << cfg.epochs_b << ";dense_epochs=" << cfg.dense_epochs
     << ";learning_rate=" << format_double(cfg.learning_rate)
     << ";momentum=" << format_double(cfg.momentum) << ";dense_optimizer=adam"
     << ";path_optimizer=sgd_momentum"
     << ";path_multiplier=" << format_double(cfg.path_multiplier)
     << ";hierarchy_m=" << format_double(cfg.hierarchy_m) << ";lambda_start="
     << (cfg.lambda_start ? format_double(*cfg.lambda_start) : std::string("auto"))
     << ";patience=" << cfg.patience << ";batch_size=" << cfg.batch_size
     << ";seed=" << cfg.seed << ";hidden_sizes=";
  for (std::size_t i = 0; i < cfg.hidden_sizes.size(); ++i) {
    if (i) os << ',';
    os << cfg.hidden_sizes[i];
  }
  return os.str();
}

TrainProblem make_problem(const Dataset& ds) {
  TrainProblem pr;
  pr.x_train = ds.x_rows(ds.train_idx);
  pr.y_train = ds.y_rows(ds.train_idx);
  pr.x_val = ds.x_rows(ds.val_idx);
  pr.y_val = ds.y_rows(ds.val_idx);
  pr.x_test = ds.x_rows(ds.test_idx);
  pr.y_test = ds.y_rows(ds.test_idx);
  switch (ds.task) {
    case TaskKind::classification:
      pr.kind = LossKind::cross_entropy;
      pr.metric_higher_better = true;
      break;
    case TaskKind::regression:
      pr.kind = LossKind::squared_error;
      pr.metric_higher_better = false;
      break;
    case TaskKind::unsupervised:
      pr.kind = LossKind::reconstruction_frobenius;
      pr.metric_higher_better = false;
      break;
  }
  return pr;
}

ResidualNet init_net(const std::vector<std::size_t>& arch, const TrainConfig& cfg) {
  Rng rng = Rng(cfg.seed).split(kInitStream);
  return make_net(arch, rng);
}

std::vector<std::size_t> arch_for(const TrainProblem& problem, const TrainConfig& cfg) {
  std::vector<std::size_t> arch;
  arch.push_back(problem.x_train.cols());
  for (std::size_t h : cfg.hidden_sizes) arch.push_back(h);
  std::size_t k_out = problem.y_train.cols();
  if (problem.kind == LossKind::cross_entropy) {
    double maxlab = 0.0;
    for (const Matrix* y : {&problem.y_train, &problem.y_val, &problem.y_test})
      for (std::size_t i = 0; i < y->size(); ++i)
        maxlab = std::max(maxlab, y->data()[i]);
    k_out = static_cast<std::size_t>(maxlab) + 1;
    k_out = std::max<std::size_t>(k_out, 2);
  }
  arch.push_back(k_out);
  return arch;
}

std::vector<std::size_t> active_features(const ResidualNet& net) {
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < net.skip.rows(); ++j) {
    bool nonzero = false;
    for (double v : net.skip.row(j))
      if (v != 0.0) {
        nonzero = true;
        break;
      }
    if (nonzero) active.push_back(j);
  }
  return active;
}

bool hierarchy_feasible(const ResidualNet& net, double m_hier) {
  if (net.layers.empty()) return true;
  const Matrix& w1 = net.layers.front().w;
  for (std::size_t j = 0; j < net.skip.rows(); ++j) {
    if (linf_norm(w1.row(j)) > m_hier * l2_norm(net.skip.row(j))) return false;
  }
  return true;
}

double accuracy(const ResidualNet& net, const Matrix& x, const Matrix& labels) {
  if (x.rows() == 0) throw ContractError("accuracy: empty batch");
  const Matrix pred = forward(net, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < pred.cols(); ++j)
      if (pred(i, j) > pred(i, arg)) arg = j;
    if (arg == static_cast<std::size_t>(labels(i, 0))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.rows());
}

double metric_of(const TrainProblem& problem, const ResidualNet& net, const Matrix& x,
                 const Matrix& y, const Matrix* mask) {
  if (problem.kind == LossKind::cross_entropy) return accuracy(net, x, y);
  return loss(net, x, y, problem.kind, mask);
}

double validation_metric(const TrainProblem& problem, const ResidualNet& net) {
  return metric_of(problem, net, problem.x_val, problem.y_val, problem.val_mask);
}

bool metric_improves(bool higher_better, double candidate, double incumbent) {
  return higher_better ? candidate > incumbent : candidate < incumbent;
}

Matrix zero_excluded_columns(const Matrix& x, const std::vector<std::size_t>& active) {
  std::vector<bool> keep(x.cols(), false);
  for (std::size_t j : active) {
    if (j >= x.cols()) throw ContractError("zero_excluded_columns: index out of range");
    keep[j] = true;
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = keep[j] ? x(i, j) : 0.0;
  return out;
}

ResidualNet train_dense(const ResidualNet& net, const TrainProblem& problem,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.dense_epochs == 0) return net;

  ResidualNet cur = net;
  auto params = param_views(cur);
  AdamState adam(params);
  Rng rng = Rng(cfg.seed).split(kDenseStream);

  const std::size_t n = problem.x_train.rows();
  if (n == 0) throw ContractError("train_dense: empty train split");
  const std::size_t batch = std::min(cfg.batch_size, n);

  ResidualNet best = cur;
  double best_val = problem.has_val() ? val_loss_of(problem, cur)
                                      : std::numeric_limits<double>::infinity();
  check_finite_loss(best_val == std::numeric_limits<double>::infinity() ? 0.0 : best_val,
                    "train_dense");
  std::size_t since_best = 0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.dense_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(begin + batch, n);
      Matrix xb = take_rows(problem.x_train, order, begin, end);
      Matrix yb = take_rows(problem.y_train, order, begin, end);
      Matrix mb;
      const Matrix* mbp = nullptr;
      if (problem.train_mask) {
        mb = take_rows(*problem.train_mask, order, begin, end);
        mbp = &mb;
      }
      BackpropOut bp = loss_and_backward(cur, xb, yb, problem.kind, mbp);
      check_finite_loss(bp.loss, "train_dense");
      adam.step(params, grad_views(bp.grads), cfg.learning_rate);
    }
    if (problem.has_val()) {
      const double vl = val_loss_of(problem, cur);
      check_finite_loss(vl, "train_dense");
      if (vl < best_val) {
        best_val = vl;
        best = cur;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    } else {
      best = cur;
    }
  }
  return best;
}

double auto_lambda_start(const ResidualNet& dense_net, const TrainProblem& problem,
                         const TrainConfig& cfg, bool grouped) {
  cfg.validate();
  const std::size_t d = dense_net.skip.rows();
  double norm_sum = 0.0;
  for (std::size_t j = 0; j < d; ++j) norm_sum += l2_norm(dense_net.skip.row(j));
  double scale = d > 0 ? norm_sum / static_cast<double>(d) : 0.0;
  if (scale == 0.0) return 1e-6;  // all-zero skip: fall back on unit scale

  const std::vector<std::size_t> before = active_features(dense_net);
  auto drops_no_feature = [&](double lambda) {
    ResidualNet probe = dense_net;
    MomentumState mom(param_views(probe));
    Rng rng = Rng(cfg.seed).split(kPathStream);
    path_epoch(probe, mom, problem, cfg, lambda, grouped, rng);
    const std::vector<std::size_t> after = active_features(probe);
    return std::includes(after.begin(), after.end(), before.begin(), before.end());
  };

  double lambda = 1e-8 * scale;
  std::optional<double> best;
  for (int step = 0; step < 64; ++step) {
    if (!drops_no_feature(lambda)) break;
    best = lambda;
    lambda *= 2.0;
  }
  if (!best) return 1e-6 * scale;
  // The probe boundary sits where one epoch already erases a feature; warm
  // starts let iterated blocks drain roughly alpha*lambda of a feature's
  // pooled mass per epoch, so a path started at the boundary collapses within
  // a couple of checkpoints. Backing off by 2^10 drains ~2% of the weakest
  // feature per 20-epoch block and spreads the dense-to-sparse descent over
  // a few hundred checkpoints.
  return *best / kStartBackoff;
}

Path train_path(const ResidualNet& dense_net, const TrainProblem& problem,
                const TrainConfig& cfg, bool grouped, std::uint64_t dataset_fingerprint) {
  cfg.validate();
  const double lambda0 =
      cfg.lambda_start ? *cfg.lambda_start : auto_lambda_start(dense_net, problem, cfg, grouped);
  if (!(lambda0 > 0.0)) throw ContractError("train_path: lambda_start must be positive");

  Path path;
  path.config = cfg;
  path.dataset_fingerprint = dataset_fingerprint;
  path.metric_higher_better = problem.metric_higher_better;

  ResidualNet net = dense_net;
  double lambda = lambda0;
  for (std::size_t block = 0;; ++block) {
    MomentumState mom(param_views(net));  // reset between lambda blocks
    Rng rng = Rng(cfg.seed).split(kPathStream + 1 + block);
    for (std::size_t b = 0; b < cfg.epochs_b; ++b)
      path_epoch(net, mom, problem, cfg, lambda, grouped, rng);
    path.checkpoints.push_back(make_checkpoint(net, problem, lambda));
    if (path.checkpoints.back().k_active == 0) break;
    lambda *= 1.0 + cfg.path_multiplier;
    if (lambda > 1e12 * lambda0)
      throw NumericalError("train_path: lambda exceeded 1e12 * lambda0 (" +
                           format_double(lambda) + ") with " +
                           std::to_string(path.checkpoints.back().k_active) +
                           " features still active");
  }
  return path;
}

Path train_path_sparse_to_dense(const TrainProblem& problem, const TrainConfig& cfg,
                                bool grouped, double lambda_hi, double lambda_lo) {
  cfg.validate();
  if (!(lambda_hi >= lambda_lo && lambda_lo > 0.0))
    throw ContractError("train_path_sparse_to_dense: need lambda_hi >= lambda_lo > 0");

  Path path;
  path.config = cfg;
  path.metric_higher_better = problem.metric_higher_better;

  ResidualNet net = init_net(arch_for(problem, cfg), cfg);
  double lambda = lambda_hi;
  for (std::size_t block = 0; lambda >= lambda_lo * (1.0 - 1e-12); ++block) {
    MomentumState mom(param_views(net));
    Rng rng = Rng(cfg.seed).split(kPathStream + 1 + block);
    for (std::size_t b = 0; b < cfg.epochs_b; ++b)
      path_epoch(net, mom, problem, cfg, lambda, grouped, rng);
    path.checkpoints.push_back(make_checkpoint(net, problem, lambda));
    lambda /= 1.0 + cfg.path_multiplier;
  }
  return path;
}

ResidualNet refit_debiased(const PathCheckpoint& checkpoint, const TrainProblem& problem,
                           const TrainConfig& cfg) {
  if (checkpoint.active_set.empty())
    throw ContractError("refit_debiased: checkpoint has no active features");

  TrainProblem restricted = problem;
  restricted.x_train = zero_excluded_columns(problem.x_train, checkpoint.active_set);
  restricted.x_val = zero_excluded_columns(problem.x_val, checkpoint.active_set);
  if (problem.x_test.rows() > 0)
    restricted.x_test = zero_excluded_columns(problem.x_test, checkpoint.active_set);

  ResidualNet fresh = init_net(checkpoint.model.arch(), cfg);
  return train_dense(fresh, restricted, cfg);
}

std::size_t thread_cap() {
  if (const char* env = std::getenv("LASSONET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

TrainConfig hidden_size_sweep(const TrainProblem& problem, const TrainConfig& cfg,
                              const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw ContractError("hidden_size_sweep: empty size list");
  const std::size_t depth = std::max<std::size_t>(1, cfg.hidden_sizes.size());

  std::vector<TrainConfig> candidates;
  for (std::size_t s : sizes) {
    TrainConfig c = cfg;
    c.hidden_sizes.assign(depth, s);
    candidates.push_back(std::move(c));
  }

  std::vector<double> metrics(candidates.size());
  auto run_one = [&](std::size_t i) {
    const ResidualNet net = init_net(arch_for(problem, candidates[i]), candidates[i]);
    const ResidualNet trained = train_dense(net, problem, candidates[i]);
    metrics[i] = validation_metric(problem, trained);
  };

  const std::size_t workers = std::min(thread_cap(), candidates.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mu;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= candidates.size()) return;
            i = next++;
          }
          run_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (metric_improves(problem.metric_higher_better, metrics[i], metrics[best])) best = i;
  return candidates[best];
}

}  // namespace lassonet
