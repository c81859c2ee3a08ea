#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "lassonet/data.hpp"
#include "lassonet/errors.hpp"
#include "lassonet/rng.hpp"
#include "test_util.hpp"

using namespace lassonet;

namespace {

namespace fs = std::filesystem;

fs::path write_temp_csv(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream f(p, std::ios::trunc);
  f << content;
  return p;
}

}  // namespace

TEST_CASE("load_csv parses a small numeric table") {
  const auto p = write_temp_csv("ln_small.csv", "a,b,c\n1,2,3\n4,5,6\n");
  const RawTable t = load_csv(p, std::nullopt, true);
  CHECK(t.values.rows() == 2);
  CHECK(t.values.cols() == 3);
  CHECK(t.values(1, 2) == 6.0);
  CHECK(t.feature_names == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.n_missing == 0);
  fs::remove(p);
}

TEST_CASE("load_csv records NA and empty cells as missing") {
  const auto p = write_temp_csv("ln_na.csv", "1,NA,3\n4,,6\n");
  const RawTable t = load_csv(p, std::nullopt, false);
  CHECK(t.n_missing == 2);
  CHECK(std::isnan(t.values(0, 1)));
  CHECK(std::isnan(t.values(1, 1)));
  CHECK(t.feature_names[0] == "f0");
  fs::remove(p);
}

TEST_CASE("load_csv treats literal nan/inf cells as missing") {
  const auto p = write_temp_csv("ln_naninf.csv", "1,nan\n2,inf\n3,4\n");
  const RawTable t = load_csv(p, std::nullopt, false);
  CHECK(t.n_missing == 2);
  CHECK(std::isnan(t.values(0, 1)));
  CHECK(std::isnan(t.values(1, 1)));
  CHECK(t.values(2, 1) == 4.0);
  fs::remove(p);
}

TEST_CASE("load_csv pulls out the label column by name or index") {
  const auto p = write_temp_csv("ln_label.csv", "x,y,cls\n1,2,dog\n3,4,cat\n");
  const RawTable t = load_csv(p, std::string("cls"), true);
  CHECK(t.values.cols() == 2);
  CHECK(t.labels_raw == std::vector<std::string>{"dog", "cat"});

  const auto p2 = write_temp_csv("ln_label_idx.csv", "5,1\n6,0\n");
  const RawTable t2 = load_csv(p2, std::string("1"), false);
  CHECK(t2.values.cols() == 1);
  CHECK(t2.labels_raw == std::vector<std::string>{"1", "0"});
  fs::remove(p);
  fs::remove(p2);
}

TEST_CASE("load_csv error paths carry row and column context") {
  const auto ragged = write_temp_csv("ln_ragged.csv", "1,2,3\n4,5\n");
  CHECK_THROWS_AS(load_csv(ragged, std::nullopt, false), ParseError);
  const auto text = write_temp_csv("ln_text.csv", "1,2\n3,oops\n");
  CHECK_THROWS_WITH_AS(load_csv(text, std::nullopt, false),
                       doctest::Contains("row 2"), ParseError);
  CHECK_THROWS_AS(load_csv(fs::temp_directory_path() / "missing_file.csv", std::nullopt, false),
                  ParseError);
  const auto nolabel = write_temp_csv("ln_nolabel.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(nolabel, std::string("zzz"), true), ParseError);
  fs::remove(ragged);
  fs::remove(text);
  fs::remove(nolabel);
}

TEST_CASE("impute_column_means") {
  SUBCASE("no missing cells: unchanged") {
    Matrix x = Matrix::from_rows({{1, 2}, {3, 4}});
    const RawTable t = testing::table_from(x);
    const RawTable out = impute_column_means(t);
    CHECK(out.values == x);
  }
  SUBCASE("single missing cell replaced by the column mean") {
    Matrix x = Matrix::from_rows({{1}, {0}, {3}});
    RawTable t = testing::table_from(x);
    t.values(1, 0) = std::numeric_limits<double>::quiet_NaN();
    t.n_missing = 1;
    const RawTable out = impute_column_means(t);
    CHECK(out.values(1, 0) == 2.0);
    CHECK(out.n_missing == 0);
  }
  SUBCASE("column means are preserved") {
    Rng rng(3);
    Matrix x = rng_gaussian(rng, 20, 4, 1.0, 2.0);
    RawTable t = testing::table_from(x);
    // knock out ~25% of cells
    std::vector<double> premeans(4);
    for (std::size_t j = 0; j < 4; ++j) {
      double sum = 0.0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < 20; ++i) {
        if (rng.next_double() < 0.25 && !(i == 0)) {
          t.values(i, j) = std::numeric_limits<double>::quiet_NaN();
          ++t.n_missing;
        }
      }
      for (std::size_t i = 0; i < 20; ++i)
        if (!std::isnan(t.values(i, j))) {
          sum += t.values(i, j);
          ++cnt;
        }
      premeans[j] = sum / static_cast<double>(cnt);
    }
    const RawTable out = impute_column_means(t);
    for (std::size_t j = 0; j < 4; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 20; ++i) sum += out.values(i, j);
      CHECK(sum / 20.0 == doctest::Approx(premeans[j]).epsilon(1e-12));
    }
  }
  SUBCASE("all-missing column is an error") {
    Matrix x(2, 1);
    RawTable t = testing::table_from(x);
    t.values(0, 0) = std::numeric_limits<double>::quiet_NaN();
    t.values(1, 0) = std::numeric_limits<double>::quiet_NaN();
    t.n_missing = 2;
    CHECK_THROWS_AS(impute_column_means(t), ContractError);
  }
}

TEST_CASE("split_standardize: sizes, determinism, disjointness") {
  Rng rng(5);
  const Matrix x = rng_gaussian(rng, 100, 3, 0.0, 1.0);
  const RawTable t = testing::table_from(x);
  const Dataset ds = split_standardize(t, {}, false, 42);
  CHECK(ds.train_idx.size() == 70);
  CHECK(ds.val_idx.size() == 10);
  CHECK(ds.test_idx.size() == 20);

  std::set<std::size_t> all;
  for (auto v : {&ds.train_idx, &ds.val_idx, &ds.test_idx})
    for (std::size_t i : *v) CHECK(all.insert(i).second);
  CHECK(all.size() == 100);

  const Dataset ds2 = split_standardize(t, {}, false, 42);
  CHECK(ds2.train_idx == ds.train_idx);
  CHECK(ds2.val_idx == ds.val_idx);
  CHECK(ds2.test_idx == ds.test_idx);
  CHECK(ds2.x == ds.x);
  const Dataset ds3 = split_standardize(t, {}, false, 43);
  CHECK(ds3.train_idx != ds.train_idx);
}

TEST_CASE("split_standardize: train columns have zero mean and unit std") {
  Rng rng(6);
  const Matrix x = rng_gaussian(rng, 200, 5, 3.0, 7.0);
  const RawTable t = testing::table_from(x);
  const Dataset ds = split_standardize(t, {}, false, 1);
  for (std::size_t j = 0; j < 5; ++j) {
    double mean = 0.0;
    for (std::size_t i : ds.train_idx) mean += ds.x(i, j);
    mean /= static_cast<double>(ds.train_idx.size());
    double var = 0.0;
    for (std::size_t i : ds.train_idx) {
      const double dv = ds.x(i, j) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(ds.train_idx.size());
    CHECK(std::fabs(mean) <= 1e-10);
    CHECK(std::fabs(std::sqrt(var) - 1.0) <= 1e-10);
  }
  // statistics really come from the train rows alone: recompute from the raw
  // table restricted to train indices and compare
  for (std::size_t j = 0; j < 5; ++j) {
    double mean = 0.0;
    for (std::size_t i : ds.train_idx) mean += x(i, j);
    mean /= static_cast<double>(ds.train_idx.size());
    CHECK(ds.feature_mean[j] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("split_standardize: constant feature centered and left unscaled") {
  Matrix x(50, 2);
  Rng rng(7);
  for (std::size_t i = 0; i < 50; ++i) {
    x(i, 0) = 4.25;
    x(i, 1) = rng.next_gaussian(0, 1);
  }
  const Dataset ds = split_standardize(testing::table_from(x), {}, false, 9);
  CHECK(ds.feature_std[0] == 1.0);
  for (std::size_t i = 0; i < 50; ++i) CHECK(ds.x(i, 0) == 0.0);
}

TEST_CASE("split_standardize: stratified split keeps class balance") {
  Rng rng(8);
  const std::size_t n = 120;
  Matrix x = rng_gaussian(rng, n, 2, 0.0, 1.0);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(i % 3 == 0 ? "a" : (i % 3 == 1 ? "b" : "c"));
  const Dataset ds = split_standardize(testing::table_from(x, labels), {}, true, 3);
  CHECK(ds.task == TaskKind::classification);
  CHECK(ds.n_classes() == 3);
  std::vector<std::size_t> count(3, 0);
  for (std::size_t i : ds.train_idx) ++count[static_cast<std::size_t>(ds.labels[i])];
  for (std::size_t c = 0; c < 3; ++c) CHECK(count[c] == 28);  // 70% of 40 per class
}

TEST_CASE("split_standardize: tiny class falls back to unstratified") {
  Rng rng(9);
  Matrix x = rng_gaussian(rng, 20, 2, 0.0, 1.0);
  std::vector<std::string> labels(20, "big");
  labels[0] = "rare";
  const Dataset ds = split_standardize(testing::table_from(x, labels), {}, true, 3);
  CHECK(ds.train_idx.size() + ds.val_idx.size() + ds.test_idx.size() == 20);
}

TEST_CASE("split_standardize: numeric labels become regression targets") {
  Rng rng(10);
  Matrix x = rng_gaussian(rng, 30, 2, 0.0, 1.0);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 30; ++i) labels.push_back(std::to_string(0.5 * i));
  const Dataset ds = split_standardize(testing::table_from(x, labels), {}, false, 3);
  CHECK(ds.task == TaskKind::regression);
  CHECK(ds.y[2] == 1.0);
}

TEST_CASE("split_standardize guards") {
  Matrix x(10, 2);
  RawTable t = testing::table_from(x);
  CHECK_THROWS_AS(split_standardize(t, {0.5, 0.2, 0.2}, false, 1), ContractError);
  t.values(0, 0) = std::numeric_limits<double>::quiet_NaN();
  t.n_missing = 1;
  CHECK_THROWS_AS(split_standardize(t, {}, false, 1), ContractError);
}

TEST_CASE("fingerprint is stable and content-sensitive") {
  Rng rng(11);
  Matrix x = rng_gaussian(rng, 10, 3, 0.0, 1.0);
  const RawTable a = testing::table_from(x);
  CHECK(table_fingerprint(a) == table_fingerprint(a));
  RawTable b = a;
  b.values(0, 0) += 1e-12;
  CHECK(table_fingerprint(a) != table_fingerprint(b));
}
