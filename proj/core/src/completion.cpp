#include "lassonet/completion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "lassonet/errors.hpp"
#include "lassonet/path_io.hpp"
#include "lassonet/svd.hpp"

namespace lassonet {

std::size_t ObservedMask::count() const {
  std::size_t c = 0;
  for (std::uint8_t v : obs) c += v != 0;
  return c;
}

bool ObservedMask::every_row_observed() const {
  for (std::size_t i = 0; i < rows; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < cols; ++j)
      if (at(i, j)) {
        any = true;
        break;
      }
    if (!any) return false;
  }
  return true;
}

namespace {

void check_shapes(const Matrix& z, const ObservedMask& mask, const char* what) {
  if (z.rows() != mask.rows || z.cols() != mask.cols)
    throw ContractError(std::string(what) + ": matrix and mask shapes differ");
}

}  // namespace

Matrix row_mean_init(const Matrix& z, const ObservedMask& mask) {
  check_shapes(z, mask, "row_mean_init");
  Matrix x(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
      if (mask.at(i, j)) {
        sum += z(i, j);
        ++cnt;
      }
    }
    if (cnt == 0)
      throw ContractError("row_mean_init: row " + std::to_string(i) +
                          " has no observed entries");
    const double mean = sum / static_cast<double>(cnt);
    for (std::size_t j = 0; j < z.cols(); ++j) x(i, j) = mask.at(i, j) ? z(i, j) : mean;
  }
  return x;
}

Matrix project_observed(const Matrix& x, const Matrix& z, const ObservedMask& mask) {
  check_shapes(x, mask, "project_observed");
  check_shapes(z, mask, "project_observed");
  Matrix out = x;
  for (std::size_t i = 0; i < mask.rows; ++i)
    for (std::size_t j = 0; j < mask.cols; ++j)
      if (mask.at(i, j)) out(i, j) = z(i, j);
  return out;
}

Matrix mask_to_weights(const ObservedMask& mask) {
  Matrix w(mask.rows, mask.cols);
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = mask.obs[i] ? 1.0 : 0.0;
  return w;
}

double masked_mse(const Matrix& a, const Matrix& b, const ObservedMask& mask) {
  check_shapes(a, mask, "masked_mse");
  check_shapes(b, mask, "masked_mse");
  double total = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < mask.rows; ++i)
    for (std::size_t j = 0; j < mask.cols; ++j)
      if (mask.at(i, j)) {
        const double r = a(i, j) - b(i, j);
        total += r * r;
        ++cnt;
      }
  if (cnt == 0) throw ContractError("masked_mse: mask selects no entries");
  return total / static_cast<double>(cnt);
}

Matrix singular_value_threshold(const Matrix& a, double threshold) {
  if (!(threshold >= 0.0)) throw ContractError("singular_value_threshold: negative threshold");
  SvdResult svd = svd_thin(a);
  const std::size_t r = svd.s.size();
  // U * diag(max(s - t, 0)) * Vt
  Matrix out(a.rows(), a.cols());
  for (std::size_t k = 0; k < r; ++k) {
    const double sk = std::max(svd.s[k] - threshold, 0.0);
    if (sk == 0.0) continue;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double uik = svd.u(i, k) * sk;
      if (uik == 0.0) continue;
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += uik * svd.vt(k, j);
    }
  }
  return out;
}

Matrix soft_impute(const Matrix& z, const ObservedMask& mask, double threshold,
                   std::size_t max_iter) {
  check_shapes(z, mask, "soft_impute");
  if (mask.count() == 0) throw ContractError("soft_impute: empty mask");
  Matrix x(z.rows(), z.cols());
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    Matrix filled = project_observed(x, z, mask);
    Matrix x_new = singular_value_threshold(filled, threshold);
    double diff = 0.0, base = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x_new.data()[i] - x.data()[i];
      diff += d * d;
      base += x.data()[i] * x.data()[i];
    }
    x = std::move(x_new);
    if (std::sqrt(diff) < 1e-5 * std::max(std::sqrt(base), 1e-30)) break;
  }
  return x;
}

SoftImputeSelection select_soft_impute(const Matrix& z, const ObservedMask& train_mask,
                                       const ObservedMask& val_mask, std::size_t max_iter,
                                       std::size_t grid_points) {
  if (val_mask.count() == 0) throw ContractError("select_soft_impute: empty validation mask");
  if (grid_points < 2) throw ContractError("select_soft_impute: need at least 2 grid points");

  Matrix zero_filled(z.rows(), z.cols());
  zero_filled = project_observed(zero_filled, z, train_mask);
  const double sigma1 = svd_thin(zero_filled).s[0];

  SoftImputeSelection best;
  bool first = true;
  for (std::size_t g = 0; g < grid_points; ++g) {
    // log grid over [0.01, 1] * sigma1
    const double expo = -2.0 + 2.0 * static_cast<double>(g) /
                                   static_cast<double>(grid_points - 1);
    const double t = sigma1 * std::pow(10.0, expo);
    Matrix x = soft_impute(z, train_mask, t, max_iter);
    const double mse = masked_mse(x, z, val_mask);
    if (first || mse < best.val_mse) {
      best = {t, std::move(x), mse};
      first = false;
    }
  }
  return best;
}

ImputeResult lassonet_impute(const Matrix& z, const ObservedMask& train_mask,
                             const ObservedMask& val_mask, const TrainConfig& cfg,
                             bool run_path) {
  check_shapes(z, train_mask, "lassonet_impute");
  cfg.validate();
  if (!train_mask.every_row_observed())
    throw ContractError("lassonet_impute: every row needs at least one observed entry");
  const bool has_val = val_mask.count() > 0;

  const Matrix w_train = mask_to_weights(train_mask);
  Matrix w_val;
  if (has_val) w_val = mask_to_weights(val_mask);

  // Targets: observed values where defined, zero elsewhere (masked out of the loss)
  Matrix y_train(z.rows(), z.cols());
  y_train = project_observed(y_train, z, train_mask);
  Matrix y_val;
  if (has_val) {
    y_val = Matrix(z.rows(), z.cols());
    y_val = project_observed(y_val, z, val_mask);
  }

  TrainProblem pr;
  pr.kind = LossKind::reconstruction_frobenius;
  pr.metric_higher_better = false;
  pr.y_train = y_train;
  pr.train_mask = &w_train;
  if (has_val) {
    pr.y_val = y_val;
    pr.val_mask = &w_val;
  }

  Matrix x = row_mean_init(z, train_mask);
  std::vector<std::size_t> arch;
  arch.push_back(z.cols());
  for (std::size_t h : cfg.hidden_sizes) arch.push_back(h);
  arch.push_back(z.cols());
  ResidualNet net = init_net(arch, cfg);

  ImputeResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  constexpr std::size_t kOuterCap = 50;
  for (std::size_t iter = 0; iter < kOuterCap; ++iter) {
    Matrix x_proj = project_observed(x, z, train_mask);
    pr.x_train = x_proj;
    if (has_val) pr.x_val = x_proj;
    net = train_dense(net, pr, cfg);  // warm start across outer iterations
    Matrix x_new = forward(net, x_proj);
    check_shapes(x_new, train_mask, "lassonet_impute");
    double diff = 0.0, base = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x_new.data()[i] - x.data()[i];
      diff += d * d;
      base += x.data()[i] * x.data()[i];
    }
    x = std::move(x_new);
    result.outer_iterations = iter + 1;
    if (std::sqrt(diff) < 1e-4 * std::max(std::sqrt(base), 1e-30)) {
      result.converged = true;
      break;
    }
    if (has_val) {
      const double vm = masked_mse(x, z, val_mask);
      if (vm < best_val) {
        best_val = vm;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }

  result.x_final = x;
  if (run_path) {
    Matrix x_proj = project_observed(x, z, train_mask);
    pr.x_train = x_proj;
    if (has_val) pr.x_val = x_proj;
    result.path = train_path(net, pr, cfg, /*grouped=*/true);
  }
  return result;
}

EntrySplit split_entries(std::size_t rows, std::size_t cols, double train_fraction,
                         double val_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0) || train_fraction + val_fraction > 1.0 + 1e-12)
    throw ContractError("split_entries: bad fractions");
  const std::size_t total = rows * cols;
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng = Rng(seed).split(0x0B5E);
  rng.shuffle(order);

  EntrySplit s{ObservedMask(rows, cols), ObservedMask(rows, cols), ObservedMask(rows, cols)};
  const std::size_t n_train =
      std::min(total, static_cast<std::size_t>(std::llround(train_fraction * total)));
  const std::size_t n_val = std::min(
      total - n_train, static_cast<std::size_t>(std::llround(val_fraction * total)));
  for (std::size_t i = 0; i < total; ++i) {
    if (i < n_train)
      s.train.obs[order[i]] = 1;
    else if (i < n_train + n_val)
      s.val.obs[order[i]] = 1;
    else
      s.test.obs[order[i]] = 1;
  }
  // row-mean init needs an observed entry in every row: steal the row's first
  // non-train entry back into train if necessary
  for (std::size_t i = 0; i < rows; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < cols; ++j)
      if (s.train.at(i, j)) {
        any = true;
        break;
      }
    if (any) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      if (s.val.at(i, j) || s.test.at(i, j)) {
        s.val.set(i, j, false);
        s.test.set(i, j, false);
        s.train.set(i, j, true);
        break;
      }
    }
  }
  return s;
}

void save_mask(const std::filesystem::path& path, const ObservedMask& mask,
               const std::string& header_block) {
  std::string content = header_block;
  for (std::size_t i = 0; i < mask.rows; ++i)
    for (std::size_t j = 0; j < mask.cols; ++j)
      if (mask.at(i, j))
        content += std::to_string(i) + "," + std::to_string(j) + "\n";
  atomic_write_text(path, content);
}

ObservedMask load_mask(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
  std::ifstream f(path);
  if (!f) throw ParseError("load_mask: cannot open " + path.string());
  ObservedMask mask(rows, cols);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError("load_mask: malformed line " + std::to_string(lineno));
    const std::size_t i = std::stoull(line.substr(0, comma));
    const std::size_t j = std::stoull(line.substr(comma + 1));
    if (i >= rows || j >= cols)
      throw ParseError("load_mask: index out of range at line " + std::to_string(lineno));
    mask.set(i, j);
  }
  if (mask.count() == 0) throw ParseError("load_mask: empty mask in " + path.string());
  return mask;
}

}  // namespace lassonet
