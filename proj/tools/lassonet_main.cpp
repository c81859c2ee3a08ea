// lassonet: dataset ingestion, regularization paths, debiased refits,
// matrix completion, and plot-ready exports from one binary.
//
// Subcommands: dense, path, refit, impute, export. Every output file starts
// with a '#'-prefixed key-value header (config echo, seed, dataset
// fingerprint, tool version) so a run can be reproduced from its artifacts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lassonet/completion.hpp"
#include "lassonet/data.hpp"
#include "lassonet/errors.hpp"
#include "lassonet/path_io.hpp"
#include "lassonet/train.hpp"
#include "lassonet/version.hpp"

namespace fs = std::filesystem;
using namespace lassonet;

namespace {

struct CommonOpts {
  std::string data_path;
  std::string label;
  std::string mode = "supervised";
  std::string out_dir = ".";
  bool header = true;
  bool standardize = true;
  bool stratify = true;
  bool impute_missing = true;
  bool linear_only = false;
  std::string hidden = "auto";
  std::string lambda_start = "auto";
  TrainConfig cfg;
};

void add_train_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--data", o.data_path, "input CSV file")->required();
  cmd->add_option("--label", o.label, "label column (name or 0-based index)");
  cmd->add_option("--mode", o.mode, "supervised | unsupervised")
      ->check(CLI::IsMember({"supervised", "unsupervised"}));
  cmd->add_option("--out", o.out_dir, "output directory (default .)");
  cmd->add_flag("--no-header{false}", o.header, "CSV has no header row");
  cmd->add_flag("--no-standardize{false}", o.standardize, "skip feature standardization");
  cmd->add_flag("--no-stratify{false}", o.stratify, "disable stratified splitting");
  cmd->add_flag("--no-impute-missing{false}", o.impute_missing,
                "fail on missing cells instead of column-mean imputation");
  cmd->add_option("--hidden-sizes", o.hidden,
                  "comma-separated hidden widths, or 'auto' for the d-based grid sweep");
  cmd->add_flag("--linear-only", o.linear_only,
                "zero-width hidden layer: the exact lasso limit");
  cmd->add_option("--epochs-b,-B", o.cfg.epochs_b, "epochs per lambda block");
  cmd->add_option("--dense-epochs", o.cfg.dense_epochs, "dense/refit epoch cap");
  cmd->add_option("--learning-rate", o.cfg.learning_rate, "step size alpha");
  cmd->add_option("--momentum", o.cfg.momentum, "path momentum");
  cmd->add_option("--path-multiplier,--eps", o.cfg.path_multiplier, "lambda growth epsilon");
  cmd->add_option("--hierarchy-m,--m", o.cfg.hierarchy_m, "hierarchy coefficient M");
  cmd->add_option("--lambda-start", o.lambda_start, "starting lambda or 'auto'");
  cmd->add_option("--patience", o.cfg.patience, "early-stopping patience");
  cmd->add_option("--batch-size", o.cfg.batch_size, "dense-phase batch size");
  cmd->add_option("--seed", o.cfg.seed, "random seed");
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    sizes.push_back(static_cast<std::size_t>(std::stoull(tok)));
  }
  if (sizes.empty()) throw ContractError("invalid --hidden-sizes '" + text + "'");
  return sizes;
}

std::vector<std::size_t> d_grid(std::size_t d) {
  auto at_least_one = [](std::size_t v) { return std::max<std::size_t>(1, v); };
  std::vector<std::size_t> grid{at_least_one(d / 3), at_least_one(2 * d / 3), at_least_one(d),
                                at_least_one(4 * d / 3)};
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

Dataset ingest(const CommonOpts& o) {
  std::optional<std::string> label;
  if (!o.label.empty() && o.mode != "unsupervised") label = o.label;
  RawTable table = load_csv(o.data_path, label, o.header);
  if (table.n_missing > 0) {
    if (!o.impute_missing)
      throw ContractError("input has " + std::to_string(table.n_missing) +
                          " missing cells and --no-impute-missing is set");
    table = impute_column_means(table);
  }
  const bool classify_mode = label.has_value();
  return split_standardize(table, {}, o.stratify && classify_mode, o.cfg.seed, o.standardize);
}

void check_m(const CommonOpts& o) {
  if (!(o.cfg.hierarchy_m > 0.0))
    throw ContractError("--hierarchy-m must be positive (the lasso limit is --linear-only)");
}

void finalize_config(CommonOpts& o, const TrainProblem& pr) {
  check_m(o);
  if (o.linear_only) {
    o.cfg.hidden_sizes = {0};
  } else if (o.hidden == "auto") {
    TrainConfig probe = o.cfg;
    probe.hidden_sizes = {1};
    o.cfg = hidden_size_sweep(pr, probe, d_grid(pr.x_train.cols()));
  } else {
    o.cfg.hidden_sizes = parse_hidden(o.hidden);
  }
  if (o.lambda_start != "auto") o.cfg.lambda_start = std::stod(o.lambda_start);
  o.cfg.validate();
}

std::string metric_name(const TrainProblem& pr) {
  return pr.kind == LossKind::cross_entropy ? "accuracy" : "mse";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::pair<std::string, std::string>> common_meta(const CommonOpts& o,
                                                             const Dataset& ds,
                                                             const std::string& command) {
  return {{"tool_version", kVersion},
          {"command", command},
          {"seed", std::to_string(o.cfg.seed)},
          {"dataset_fingerprint", hex64(ds.fingerprint)},
          {"config", config_echo(o.cfg)}};
}

bool grouped_for(const TrainProblem& pr) {
  return pr.kind != LossKind::squared_error || pr.y_train.cols() > 1;
}

int cmd_dense(CommonOpts& o) {
  const Dataset ds = ingest(o);
  const TrainProblem pr = make_problem(ds);
  finalize_config(o, pr);
  const ResidualNet net = train_dense(init_net(arch_for(pr, o.cfg), o.cfg), pr, o.cfg);

  fs::create_directories(o.out_dir);
  const fs::path model_file = fs::path(o.out_dir) / "dense_model.lnet";
  save_net(net, model_file);

  const double train_m = metric_of(pr, net, pr.x_train, pr.y_train, pr.train_mask);
  const double val_m = validation_metric(pr, net);
  const double test_m = pr.x_test.rows() > 0
                            ? metric_of(pr, net, pr.x_test, pr.y_test, pr.test_mask)
                            : std::numeric_limits<double>::quiet_NaN();
  std::ostringstream body;
  body << meta_header(common_meta(o, ds, "dense"));
  body << "# columns: split," << metric_name(pr) << "\n";
  body << "train," << format_double(train_m) << "\n";
  body << "val," << format_double(val_m) << "\n";
  body << "test," << format_double(test_m) << "\n";
  atomic_write_text(fs::path(o.out_dir) / "dense_metrics.csv", body.str());
  std::cout << "dense: val " << metric_name(pr) << " = " << format_double(val_m)
            << ", model -> " << model_file.string() << "\n";
  return 0;
}

int cmd_path(CommonOpts& o) {
  const Dataset ds = ingest(o);
  const TrainProblem pr = make_problem(ds);
  finalize_config(o, pr);

  const ResidualNet dense = train_dense(init_net(arch_for(pr, o.cfg), o.cfg), pr, o.cfg);
  const Path path = train_path(dense, pr, o.cfg, grouped_for(pr), ds.fingerprint);

  fs::create_directories(fs::path(o.out_dir) / "snapshots");
  std::vector<PathRecord> records;
  for (std::size_t i = 0; i < path.checkpoints.size(); ++i) {
    const PathCheckpoint& ck = path.checkpoints[i];
    char name[64];
    std::snprintf(name, sizeof(name), "snapshots/ckpt_%04zu.lnet", i);
    save_net(ck.model, fs::path(o.out_dir) / name);
    PathRecord r;
    r.lambda = ck.lambda;
    r.k_active = ck.k_active;
    r.active = ck.active_set;
    for (std::size_t j : ck.active_set) r.active_names.push_back(ds.feature_names[j]);
    r.train_loss = ck.train_loss;
    r.val_loss = ck.val_loss;
    r.val_metric = ck.val_metric;
    r.snapshot_ref = name;
    records.push_back(std::move(r));
  }

  PathFileMeta meta;
  meta.tool_version = kVersion;
  meta.seed = o.cfg.seed;
  meta.dataset_fingerprint = ds.fingerprint;
  meta.config_echo = config_echo(o.cfg);
  meta.metric_name = metric_name(pr);
  meta.metric_higher_better = pr.metric_higher_better;
  write_path_file(fs::path(o.out_dir) / "path.csv", meta, records);

  std::ostringstream summary;
  summary << meta_header(common_meta(o, ds, "path"));
  summary << "# columns: lambda,k_active,train_loss,val_loss,val_" << metric_name(pr) << "\n";
  for (const auto& ck : path.checkpoints)
    summary << format_double(ck.lambda) << ',' << ck.k_active << ','
            << format_double(ck.train_loss) << ',' << format_double(ck.val_loss) << ','
            << format_double(ck.val_metric) << "\n";
  atomic_write_text(fs::path(o.out_dir) / "summary.csv", summary.str());

  std::cout << "path: " << path.checkpoints.size() << " checkpoints, final k = "
            << path.checkpoints.back().k_active << ", exports in " << o.out_dir << "\n";
  return 0;
}

int cmd_refit(CommonOpts& o, const std::string& path_file, long long target_k,
              double target_lambda, bool seed_given) {
  const PathFileContent pf = read_path_file(path_file);
  if (pf.records.empty()) throw ContractError("path file has no checkpoints");
  if (!seed_given) o.cfg.seed = pf.meta.seed;  // keep the split that produced the path

  const Dataset ds = ingest(o);
  if (ds.fingerprint != pf.meta.dataset_fingerprint)
    throw ContractError("dataset fingerprint " + hex64(ds.fingerprint) +
                        " does not match the path file's " +
                        hex64(pf.meta.dataset_fingerprint));
  const TrainProblem pr = make_problem(ds);
  finalize_config(o, pr);

  // selection: best validation metric among checkpoints with k_active <= target
  // (a target above d clamps to the densest checkpoint)
  const PathRecord* chosen = nullptr;
  if (target_lambda > 0.0) {
    for (const auto& r : pf.records)
      if (r.lambda == target_lambda) chosen = &r;
    if (!chosen) throw ContractError("no checkpoint at lambda " + format_double(target_lambda));
  } else {
    if (target_k < 1) throw ContractError("--k must be at least 1");
    std::size_t max_k = 0;
    for (const auto& r : pf.records) max_k = std::max(max_k, r.k_active);
    const std::size_t k_cap = std::min<std::size_t>(static_cast<std::size_t>(target_k), max_k);
    for (const auto& r : pf.records) {
      if (r.k_active < 1 || r.k_active > k_cap) continue;
      if (!chosen ||
          metric_improves(pf.meta.metric_higher_better, r.val_metric, chosen->val_metric) ||
          (r.val_metric == chosen->val_metric && r.k_active < chosen->k_active))
        chosen = &r;
    }
    if (!chosen)
      throw ContractError("no checkpoint with 1 <= k_active <= " + std::to_string(k_cap));
  }

  PathCheckpoint ck;
  ck.lambda = chosen->lambda;
  ck.k_active = chosen->k_active;
  ck.active_set = chosen->active;
  ck.model = init_net(arch_for(pr, o.cfg), o.cfg);  // refit is from scratch
  const ResidualNet refit = refit_debiased(ck, pr, o.cfg);

  const Matrix x_test = zero_excluded_columns(pr.x_test, ck.active_set);
  const Matrix x_val = zero_excluded_columns(pr.x_val, ck.active_set);
  const double test_m = metric_of(pr, refit, x_test, pr.y_test, pr.test_mask);
  const double val_m = metric_of(pr, refit, x_val, pr.y_val, pr.val_mask);

  fs::create_directories(o.out_dir);
  const fs::path model_file = fs::path(o.out_dir) / "refit_model.lnet";
  save_net(refit, model_file);
  std::ostringstream body;
  body << meta_header(common_meta(o, ds, "refit"));
  body << "# path_file: " << path_file << "\n";
  body << "# columns: lambda,k_active,val_" << metric_name(pr) << ",test_"
       << metric_name(pr) << "\n";
  body << format_double(ck.lambda) << ',' << ck.k_active << ',' << format_double(val_m)
       << ',' << format_double(test_m) << "\n";
  atomic_write_text(fs::path(o.out_dir) / "refit_metrics.csv", body.str());

  std::cout << "refit: k = " << ck.k_active << ", test " << metric_name(pr) << " = "
            << format_double(test_m) << "\n";
  return 0;
}

int cmd_impute(CommonOpts& o, const std::string& mask_file, double observe_fraction,
               double val_fraction, std::size_t soft_impute_iters) {
  RawTable table = load_csv(o.data_path, std::nullopt, o.header);
  if (table.n_missing > 0) {
    if (!o.impute_missing)
      throw ContractError("input has missing cells and --no-impute-missing is set");
    table = impute_column_means(table);
  }
  Dataset ds;  // only for meta echo; completion handles its own scaling
  ds.fingerprint = table_fingerprint(table);
  ds.feature_names = table.feature_names;

  const Matrix& z = table.values;
  ObservedMask train_mask, val_mask, test_mask;
  if (!mask_file.empty()) {
    train_mask = load_mask(mask_file, z.rows(), z.cols());
    val_mask = ObservedMask(z.rows(), z.cols());
    test_mask = ObservedMask(z.rows(), z.cols());
    for (std::size_t i = 0; i < train_mask.obs.size(); ++i)
      if (!train_mask.obs[i]) test_mask.obs[i] = 1;
  } else {
    const EntrySplit split = split_entries(z.rows(), z.cols(), observe_fraction,
                                           val_fraction, o.cfg.seed);
    train_mask = split.train;
    val_mask = split.val;
    test_mask = split.test;
  }

  check_m(o);
  if (o.linear_only) {
    o.cfg.hidden_sizes = {0};
  } else if (o.hidden == "auto") {
    // two hidden layers for completion, widths from the d-based grid
    o.cfg.hidden_sizes = {z.cols(), z.cols()};
  } else {
    o.cfg.hidden_sizes = parse_hidden(o.hidden);
  }
  if (o.lambda_start != "auto") o.cfg.lambda_start = std::stod(o.lambda_start);
  o.cfg.validate();

  const ImputeResult net_result = lassonet_impute(z, train_mask, val_mask, o.cfg, true);
  const bool has_test = test_mask.count() > 0;
  const bool has_val = val_mask.count() > 0;

  std::optional<SoftImputeSelection> soft;
  if (has_val) soft = select_soft_impute(z, train_mask, val_mask, soft_impute_iters);

  fs::create_directories(o.out_dir);
  auto meta = common_meta(o, ds, "impute");
  meta.emplace_back("observe_fraction", format_double(observe_fraction));
  meta.emplace_back("val_fraction", format_double(val_fraction));

  // imputed matrix: observed entries verbatim, model reconstruction elsewhere
  ObservedMask known(z.rows(), z.cols());
  for (std::size_t i = 0; i < known.obs.size(); ++i)
    known.obs[i] = train_mask.obs[i] | val_mask.obs[i];
  const Matrix imputed = project_observed(net_result.x_final, z, known);
  std::ostringstream mat;
  mat << meta_header(meta);
  for (std::size_t i = 0; i < imputed.rows(); ++i) {
    for (std::size_t j = 0; j < imputed.cols(); ++j) {
      if (j) mat << ',';
      mat << format_double(imputed(i, j));
    }
    mat << "\n";
  }
  atomic_write_text(fs::path(o.out_dir) / "imputed.csv", mat.str());

  save_mask(fs::path(o.out_dir) / "mask_train.csv", train_mask, meta_header(meta));
  save_mask(fs::path(o.out_dir) / "mask_val.csv", val_mask, meta_header(meta));
  save_mask(fs::path(o.out_dir) / "mask_test.csv", test_mask, meta_header(meta));

  std::ostringstream mse;
  mse << meta_header(meta);
  mse << "# columns: method,test_mse\n";
  const std::string net_mse =
      has_test ? format_double(masked_mse(net_result.x_final, z, test_mask))
               : std::string("undefined");
  mse << "lassonet," << net_mse << "\n";
  if (soft) {
    const std::string soft_mse =
        has_test ? format_double(masked_mse(soft->x, z, test_mask)) : std::string("undefined");
    mse << "soft_impute," << soft_mse << "\n";
  }
  atomic_write_text(fs::path(o.out_dir) / "impute_mse.csv", mse.str());

  std::cout << "impute: " << net_result.outer_iterations << " outer iterations, "
            << (net_result.converged ? "converged" : "stopped") << ", test mse lassonet = "
            << net_mse << "\n";
  return 0;
}

int cmd_export(const std::string& path_file, const std::string& out_dir) {
  const PathFileContent pf = read_path_file(path_file);
  if (pf.records.empty()) throw ContractError("path file has no checkpoints");
  fs::create_directories(out_dir);

  std::vector<std::pair<std::string, std::string>> meta{
      {"tool_version", kVersion},
      {"command", "export"},
      {"seed", std::to_string(pf.meta.seed)},
      {"dataset_fingerprint", hex64(pf.meta.dataset_fingerprint)},
      {"config", pf.meta.config_echo}};

  // (k, metric) pairs sorted by k
  std::vector<const PathRecord*> by_k;
  for (const auto& r : pf.records) by_k.push_back(&r);
  std::stable_sort(by_k.begin(), by_k.end(),
                   [](const PathRecord* a, const PathRecord* b) {
                     return a->k_active < b->k_active;
                   });
  std::ostringstream km;
  km << meta_header(meta);
  km << "# columns: k_active,val_" << pf.meta.metric_name << ",lambda\n";
  for (const PathRecord* r : by_k)
    km << r->k_active << ',' << format_double(r->val_metric) << ','
       << format_double(r->lambda) << "\n";
  atomic_write_text(fs::path(out_dir) / "k_metric.csv", km.str());

  // per-feature entry/exit lambdas over the path
  std::map<std::size_t, std::pair<double, double>> spans;  // feature -> (first, last)
  std::map<std::size_t, std::string> names;
  for (const auto& r : pf.records) {
    for (std::size_t idx = 0; idx < r.active.size(); ++idx) {
      const std::size_t j = r.active[idx];
      auto [it, inserted] = spans.try_emplace(j, r.lambda, r.lambda);
      if (!inserted) it->second.second = r.lambda;
      if (idx < r.active_names.size()) names[j] = r.active_names[idx];
    }
  }
  std::ostringstream fp;
  fp << meta_header(meta);
  fp << "# columns: feature_index,feature_name,entry_lambda,exit_lambda\n";
  for (const auto& [j, span] : spans)
    fp << j << ',' << names[j] << ',' << format_double(span.first) << ','
       << format_double(span.second) << "\n";
  atomic_write_text(fs::path(out_dir) / "feature_paths.csv", fp.str());

  // coefficient magnitudes per checkpoint when the snapshots are resolvable
  const fs::path base = fs::path(path_file).parent_path();
  bool have_snapshots = !pf.records.empty();
  for (const auto& r : pf.records)
    if (r.snapshot_ref.empty() || !fs::exists(base / r.snapshot_ref)) {
      have_snapshots = false;
      break;
    }
  if (have_snapshots) {
    std::ostringstream co;
    co << meta_header(meta);
    co << "# columns: lambda,then one column per feature: ||theta_j||_2\n";
    for (const auto& r : pf.records) {
      const ResidualNet net = load_net(base / r.snapshot_ref);
      co << format_double(r.lambda);
      for (std::size_t j = 0; j < net.skip.rows(); ++j)
        co << ',' << format_double(l2_norm(net.skip.row(j)));
      co << "\n";
    }
    atomic_write_text(fs::path(out_dir) / "coefficients.csv", co.str());
  }

  std::cout << "export: " << pf.records.size() << " checkpoints, " << spans.size()
            << " features appeared on the path\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LassoNet feature-selection paths, debiased refits, and matrix completion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.footer("LASSONET_THREADS caps sweep worker count.");

  CommonOpts dense_o, path_o, refit_o, impute_o;
  std::string refit_path_file, impute_mask_file, export_path_file, export_out = ".";
  long long refit_k = -1;
  double refit_lambda = 0.0;
  double observe_fraction = 0.8, val_fraction = 0.1;
  std::size_t soft_iters = 100;

  CLI::App* dense = app.add_subcommand("dense", "train the unpenalized dense model");
  add_train_flags(dense, dense_o);

  CLI::App* path = app.add_subcommand("path", "train the dense-to-sparse lambda path");
  add_train_flags(path, path_o);

  CLI::App* refit = app.add_subcommand("refit", "debiased refit of a path checkpoint");
  add_train_flags(refit, refit_o);
  refit->add_option("--path-file", refit_path_file, "path.csv from a previous run")->required();
  refit->add_option("--k", refit_k, "target number of active features");
  refit->add_option("--lambda", refit_lambda, "exact checkpoint lambda instead of --k");

  CLI::App* impute = app.add_subcommand("impute", "matrix completion with a held-out entry split");
  add_train_flags(impute, impute_o);
  impute->add_option("--mask-file", impute_mask_file, "observed-entry mask (row,col lines)");
  impute->add_option("--observe-fraction", observe_fraction,
                     "fraction of entries observed for training (default 0.8)");
  impute->add_option("--val-fraction", val_fraction,
                     "fraction of entries held for validation (default 0.1)");
  impute->add_option("--soft-impute-iters", soft_iters, "soft-impute iteration cap");

  CLI::App* exp = app.add_subcommand("export", "plot-ready CSVs from a path file");
  exp->add_option("--path-file", export_path_file, "path.csv from a previous run")->required();
  exp->add_option("--out", export_out, "output directory (default .)");

  try {
    app.parse(argc, argv);
    if (dense->parsed()) return cmd_dense(dense_o);
    if (path->parsed()) return cmd_path(path_o);
    if (refit->parsed())
      return cmd_refit(refit_o, refit_path_file, refit_k, refit_lambda,
                       refit->count("--seed") > 0);
    if (impute->parsed())
      return cmd_impute(impute_o, impute_mask_file, observe_fraction, val_fraction, soft_iters);
    if (exp->parsed()) return cmd_export(export_path_file, export_out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
