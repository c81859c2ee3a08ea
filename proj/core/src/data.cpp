#include "lassonet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "lassonet/errors.hpp"
#include "lassonet/rng.hpp"

namespace lassonet {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA"; }

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && p == last;
}

}  // namespace

RawTable load_csv(const std::filesystem::path& path,
                  const std::optional<std::string>& label_column, bool header) {
  std::ifstream f(path);
  if (!f) throw ParseError("load_csv: cannot open " + path.string());

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw ParseError("load_csv: " + path.string() + " has no rows");

  const std::size_t width = rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width)
      throw ParseError("load_csv: ragged row " + std::to_string(i + 1) + " (" +
                       std::to_string(rows[i].size()) + " cells, expected " +
                       std::to_string(width) + ")");
  }

  std::vector<std::string> names;
  std::size_t data_start = 0;
  if (header) {
    names = rows.front();
    data_start = 1;
    if (rows.size() == 1) throw ParseError("load_csv: header-only file");
  } else {
    for (std::size_t j = 0; j < width; ++j) names.push_back("f" + std::to_string(j));
  }

  std::optional<std::size_t> label_idx;
  if (label_column) {
    if (header) {
      for (std::size_t j = 0; j < width; ++j)
        if (names[j] == *label_column) label_idx = j;
    }
    if (!label_idx) {
      double num;
      if (parse_double(*label_column, num) && num >= 0 && num == std::floor(num) &&
          static_cast<std::size_t>(num) < width) {
        label_idx = static_cast<std::size_t>(num);
      } else {
        throw ParseError("load_csv: label column '" + *label_column + "' not found");
      }
    }
  }

  RawTable t;
  const std::size_t n = rows.size() - data_start;
  const std::size_t d = width - (label_idx ? 1 : 0);
  t.values = Matrix(n, d);
  for (std::size_t j = 0, k = 0; j < width; ++j) {
    if (label_idx && j == *label_idx) continue;
    t.feature_names.push_back(names[j]);
    ++k;
  }

  for (std::size_t r = 0; r < n; ++r) {
    const auto& cells = rows[r + data_start];
    std::size_t k = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (label_idx && j == *label_idx) {
        t.labels_raw.push_back(cells[j]);
        continue;
      }
      if (is_missing(cells[j])) {
        t.values(r, k) = std::numeric_limits<double>::quiet_NaN();
        ++t.n_missing;
      } else {
        double v;
        if (!parse_double(cells[j], v))
          throw ParseError("load_csv: non-numeric cell '" + cells[j] + "' at row " +
                           std::to_string(r + data_start + 1) + ", column " +
                           std::to_string(j + 1));
        if (!std::isfinite(v)) {  // literal nan/inf cells count as missing
          t.values(r, k) = std::numeric_limits<double>::quiet_NaN();
          ++t.n_missing;
        } else {
          t.values(r, k) = v;
        }
      }
      ++k;
    }
  }
  return t;
}

RawTable impute_column_means(const RawTable& table) {
  RawTable out = table;
  const std::size_t n = out.values.rows(), d = out.values.cols();
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = out.values(i, j);
      if (!std::isnan(v)) {
        sum += v;
        ++cnt;
      }
    }
    if (cnt == 0)
      throw ContractError("impute_column_means: column " + std::to_string(j) +
                          " ('" + table.feature_names[j] + "') is entirely missing");
    if (cnt == n) continue;
    const double mean = sum / static_cast<double>(cnt);
    for (std::size_t i = 0; i < n; ++i)
      if (std::isnan(out.values(i, j))) out.values(i, j) = mean;
  }
  out.n_missing = 0;
  return out;
}

std::uint64_t table_fingerprint(const RawTable& table) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto mix_bytes = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ull;
    }
  };
  const std::uint64_t dims[2] = {table.values.rows(), table.values.cols()};
  mix_bytes(dims, sizeof(dims));
  mix_bytes(table.values.data(), table.values.size() * sizeof(double));
  for (const auto& s : table.feature_names) mix_bytes(s.data(), s.size() + 1);
  for (const auto& s : table.labels_raw) mix_bytes(s.data(), s.size() + 1);
  return h;
}

Matrix Dataset::x_rows(const std::vector<std::size_t>& idx) const {
  Matrix out(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::memcpy(out.data() + i * x.cols(), x.data() + idx[i] * x.cols(),
                x.cols() * sizeof(double));
  return out;
}

Matrix Dataset::y_rows(const std::vector<std::size_t>& idx) const {
  switch (task) {
    case TaskKind::classification: {
      Matrix out(idx.size(), 1);
      for (std::size_t i = 0; i < idx.size(); ++i)
        out(i, 0) = static_cast<double>(labels[idx[i]]);
      return out;
    }
    case TaskKind::regression: {
      Matrix out(idx.size(), 1);
      for (std::size_t i = 0; i < idx.size(); ++i) out(i, 0) = y[idx[i]];
      return out;
    }
    case TaskKind::unsupervised:
      return x_rows(idx);
  }
  throw ContractError("y_rows: unknown task");
}

namespace {

// three-way split of a shuffled index list; counts rounded, remainder to test
void take_split(const std::vector<std::size_t>& pool, SplitFractions f,
                std::vector<std::size_t>& train, std::vector<std::size_t>& val,
                std::vector<std::size_t>& test) {
  const std::size_t m = pool.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(f.train * static_cast<double>(m)));
  std::size_t n_val = static_cast<std::size_t>(std::llround(f.val * static_cast<double>(m)));
  n_train = std::min(n_train, m);
  n_val = std::min(n_val, m - n_train);
  for (std::size_t i = 0; i < m; ++i) {
    if (i < n_train)
      train.push_back(pool[i]);
    else if (i < n_train + n_val)
      val.push_back(pool[i]);
    else
      test.push_back(pool[i]);
  }
}

}  // namespace

Dataset split_standardize(const RawTable& table, SplitFractions fractions, bool stratify,
                          std::uint64_t seed, bool standardize) {
  const double fsum = fractions.train + fractions.val + fractions.test;
  if (std::fabs(fsum - 1.0) > 1e-9)
    throw ContractError("split_standardize: fractions must sum to 1");
  if (table.n_missing > 0)
    throw ContractError("split_standardize: table still has missing cells; impute first");

  Dataset ds;
  ds.x = table.values;
  ds.feature_names = table.feature_names;
  ds.fingerprint = table_fingerprint(table);
  ds.standardized = standardize;

  const std::size_t n = ds.x.rows();
  if (n == 0) throw ContractError("split_standardize: empty table");

  if (!table.labels_raw.empty()) {
    // classification when any label fails to parse as a number
    bool numeric = true;
    std::vector<double> parsed(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!parse_double(table.labels_raw[i], parsed[i])) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      ds.task = TaskKind::regression;
      ds.y = Vector(n);
      for (std::size_t i = 0; i < n; ++i) ds.y[i] = parsed[i];
    } else {
      ds.task = TaskKind::classification;
      std::map<std::string, int> ids;
      for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = ids.try_emplace(table.labels_raw[i],
                                              static_cast<int>(ds.class_names.size()));
        if (inserted) ds.class_names.push_back(table.labels_raw[i]);
        ds.labels.push_back(it->second);
      }
    }
  } else {
    ds.task = TaskKind::unsupervised;
  }

  Rng rng = Rng(seed).split(0x5917ull);

  bool do_stratify = stratify && ds.task == TaskKind::classification;
  if (do_stratify) {
    std::vector<std::size_t> class_count(ds.n_classes(), 0);
    for (int c : ds.labels) ++class_count[static_cast<std::size_t>(c)];
    for (std::size_t c = 0; c < class_count.size(); ++c) {
      if (class_count[c] < 3) {
        std::cerr << "warning: class '" << ds.class_names[c] << "' has "
                  << class_count[c] << " samples; falling back to unstratified split\n";
        do_stratify = false;
        break;
      }
    }
  }

  if (do_stratify) {
    for (std::size_t c = 0; c < ds.n_classes(); ++c) {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < n; ++i)
        if (ds.labels[i] == static_cast<int>(c)) pool.push_back(i);
      Rng crng = rng.split(c);
      crng.shuffle(pool);
      take_split(pool, fractions, ds.train_idx, ds.val_idx, ds.test_idx);
    }
    std::sort(ds.train_idx.begin(), ds.train_idx.end());
    std::sort(ds.val_idx.begin(), ds.val_idx.end());
    std::sort(ds.test_idx.begin(), ds.test_idx.end());
  } else {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    rng.shuffle(pool);
    take_split(pool, fractions, ds.train_idx, ds.val_idx, ds.test_idx);
  }

  // standardization statistics come from train rows only
  const std::size_t d = ds.x.cols();
  ds.feature_mean = Vector(d);
  ds.feature_std = Vector(d, 1.0);
  if (standardize) {
    const double m = static_cast<double>(ds.train_idx.size());
    if (m == 0) throw ContractError("split_standardize: empty train split");
    for (std::size_t j = 0; j < d; ++j) {
      double sum = 0.0;
      for (std::size_t i : ds.train_idx) sum += ds.x(i, j);
      const double mean = sum / m;
      double ss = 0.0;
      for (std::size_t i : ds.train_idx) {
        const double dev = ds.x(i, j) - mean;
        ss += dev * dev;
      }
      double sd = std::sqrt(ss / m);
      if (sd == 0.0) sd = 1.0;  // constant column: centered to zero, left unscaled
      ds.feature_mean[j] = mean;
      ds.feature_std[j] = sd;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        ds.x(i, j) = (ds.x(i, j) - ds.feature_mean[j]) / ds.feature_std[j];
  }
  return ds;
}

}  // namespace lassonet
