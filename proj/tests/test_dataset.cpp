#include "gemith/dataset.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

using namespace gemith;

namespace {

std::filesystem::path write_temp_csv(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("load_csv splits features from the named target column") {
  const auto path = write_temp_csv("ds_basic.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  const Dataset ds = load_csv(path.string(), "y");
  CHECK(ds.n() == 3);
  CHECK(ds.p() == 2);
  CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.target_name == "y");
  CHECK(ds.features(0, 0) == 1.0);
  CHECK(ds.features(0, 1) == 2.0);
  CHECK(ds.features(2, 0) == 7.0);
  CHECK(ds.target(0) == 3.0);
  CHECK(ds.target(2) == 9.0);
}

TEST_CASE("load_csv accepts a target index and middle columns") {
  const auto path = write_temp_csv("ds_mid.csv", "a,y,b\n1,3,2\n4,6,5\n");
  const Dataset by_name = load_csv(path.string(), "y");
  const Dataset by_index = load_csv(path.string(), std::size_t{1});
  CHECK(by_name.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(by_name.target(1) == 6.0);
  CHECK(by_index.target(1) == 6.0);
  CHECK(by_index.features == by_name.features);
}

TEST_CASE("load_csv failures point at the problem") {
  const auto bad_field = write_temp_csv("ds_bad_field.csv", "a,y\n1,2\nx,4\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_field.string(), "y"),
                       doctest::Contains("data row 2"), std::runtime_error);

  const auto ragged = write_temp_csv("ds_ragged.csv", "a,y\n1,2,3\n");
  CHECK_THROWS_AS(load_csv(ragged.string(), "y"), std::runtime_error);

  const auto no_target = write_temp_csv("ds_no_target.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(no_target.string(), "y"), std::runtime_error);

  CHECK_THROWS(load_csv("/nonexistent/definitely_missing.csv", "y"));
}

TEST_CASE("validate rejects malformed datasets") {
  Dataset ds;
  ds.features = Matrix::Ones(3, 2);
  ds.target = Vector::Ones(3);
  ds.feature_names = {"a", "b"};
  ds.target_name = "y";
  CHECK_NOTHROW(ds.validate());

  Dataset short_target = ds;
  short_target.target = Vector::Ones(2);
  CHECK_THROWS_AS(short_target.validate(), std::invalid_argument);

  Dataset with_nan = ds;
  with_nan.features(1, 1) = std::nan("");
  CHECK_THROWS_AS(with_nan.validate(), std::invalid_argument);

  Dataset dup_names = ds;
  dup_names.feature_names = {"a", "a"};
  CHECK_THROWS_AS(dup_names.validate(), std::invalid_argument);

  Dataset empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("save_csv round-trips exact doubles") {
  Dataset ds = synthetic_friedman1(25, 1.0, 99);
  const auto path = std::filesystem::temp_directory_path() / "ds_roundtrip.csv";
  save_csv(ds, path.string());
  const Dataset back = load_csv(path.string(), ds.target_name);
  CHECK(back.features == ds.features);
  CHECK(back.target == ds.target);
  CHECK(back.feature_names == ds.feature_names);
}

TEST_CASE("train_test_split partitions the rows") {
  const Dataset ds = synthetic_friedman1(10, 0.5, 4);
  const auto [train, test] = train_test_split(ds, 0.2, 17);
  CHECK(train.n() == 8);
  CHECK(test.n() == 2);

  // Every original row appears exactly once across the two sides. Rows are
  // identified by their x1 value, unique with probability one.
  std::multiset<double> seen;
  for (Eigen::Index i = 0; i < train.n(); ++i) seen.insert(train.features(i, 0));
  for (Eigen::Index i = 0; i < test.n(); ++i) seen.insert(test.features(i, 0));
  std::multiset<double> original;
  for (Eigen::Index i = 0; i < ds.n(); ++i) original.insert(ds.features(i, 0));
  CHECK(seen == original);
}

TEST_CASE("train_test_split is seed-deterministic and validates its inputs") {
  const Dataset ds = synthetic_friedman1(30, 0.5, 4);
  const auto [a_train, a_test] = train_test_split(ds, 0.3, 5);
  const auto [b_train, b_test] = train_test_split(ds, 0.3, 5);
  CHECK(a_train.features == b_train.features);
  CHECK(a_test.target == b_test.target);

  CHECK_THROWS_AS(train_test_split(ds, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(train_test_split(ds, 1.0, 1), std::invalid_argument);
  const Dataset tiny = synthetic_friedman1(3, 0.5, 4);
  CHECK_THROWS_AS(train_test_split(tiny, 0.5, 1), std::invalid_argument);  // train would be 1
}

TEST_CASE("fold plan balances sizes within one row") {
  const FoldPlan plan = make_fold_plan(11, 5, 2);
  plan.validate();
  std::vector<std::size_t> sizes;
  for (std::uint32_t f = 0; f < 5; ++f) sizes.push_back(plan.fold_size(f));
  std::size_t total = 0, lo = 11, hi = 0;
  for (std::size_t s : sizes) {
    total += s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CHECK(total == 11);
  CHECK(hi - lo <= 1);
  CHECK(hi == 3);  // 11 over 5 folds: one of 3 and four of 2
  CHECK(lo == 2);
}

TEST_CASE("fold plan rejects more folds than rows and under two folds") {
  CHECK_THROWS_AS(make_fold_plan(5, 6, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_fold_plan(5, 1, 1), std::invalid_argument);
  CHECK_NOTHROW(make_fold_plan(5, 5, 1));
}

TEST_CASE("fold plan content hash tracks the assignment, not the seed") {
  const FoldPlan a = make_fold_plan(40, 5, 7);
  FoldPlan b = a;
  b.seed = 9999;  // metadata only
  CHECK(a.content_hash() == b.content_hash());

  FoldPlan c = a;
  c.assignment[0] = (c.assignment[0] + 1) % 5;
  CHECK(a.content_hash() != c.content_hash());

  const FoldPlan other_seed = make_fold_plan(40, 5, 8);
  CHECK(a.content_hash() != other_seed.content_hash());  // different shuffle
  const FoldPlan replay = make_fold_plan(40, 5, 7);
  CHECK(a.assignment == replay.assignment);
}

TEST_CASE("standardize maps two points to plus/minus one and constants to zero") {
  Dataset ds;
  ds.features = Matrix(2, 2);
  ds.features << 1.0, 5.0, 3.0, 5.0;  // second column constant
  ds.target = Vector::Zero(2);
  ds.feature_names = {"a", "b"};
  ds.target_name = "y";

  const Scaler scaler = standardize_fit(ds);
  CHECK(scaler.mean(0) == 2.0);
  CHECK(scaler.stddev(0) == 1.0);  // population sd of {1, 3}
  CHECK(scaler.stddev(1) == 1.0);  // constant column clamped

  const Dataset z = standardize_apply(scaler, ds);
  CHECK(z.features(0, 0) == doctest::Approx(-1.0));
  CHECK(z.features(1, 0) == doctest::Approx(1.0));
  CHECK(z.features(0, 1) == 0.0);
  CHECK(z.features(1, 1) == 0.0);
  CHECK(z.target == ds.target);
}

TEST_CASE("standardization round-trips through the scaler") {
  const Dataset ds = synthetic_friedman1(60, 1.0, 21);
  const Scaler scaler = standardize_fit(ds);
  const Dataset z = standardize_apply(scaler, ds);
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (Eigen::Index j = 0; j < ds.p(); ++j) {
      const double back = z.features(i, j) * scaler.stddev(j) + scaler.mean(j);
      CHECK(back == doctest::Approx(ds.features(i, j)).epsilon(1e-10));
    }
}

TEST_CASE("friedman1 response matches the closed form") {
  // All features at 0.5: 10*sin(pi/4) + 0 + 5 + 2.5.
  Matrix X = Matrix::Constant(1, 10, 0.5);
  const Vector y = friedman1_true(X);
  const double expect = 10.0 * std::sin(M_PI * 0.25) + 7.5;
  CHECK(y(0) == doctest::Approx(14.5710678118654755).epsilon(1e-15));
  CHECK(y(0) == doctest::Approx(expect).epsilon(1e-15));

  // Independently recompute a random row.
  Matrix R = friedman1_features(5, 77);
  const Vector yr = friedman1_true(R);
  for (Eigen::Index i = 0; i < 5; ++i) {
    const double manual = 10.0 * std::sin(M_PI * R(i, 0) * R(i, 1)) +
                          20.0 * (R(i, 2) - 0.5) * (R(i, 2) - 0.5) + 10.0 * R(i, 3) +
                          5.0 * R(i, 4);
    CHECK(yr(i) == doctest::Approx(manual).epsilon(1e-15));
  }
}

TEST_CASE("friedman1 features are 10 uniform columns, only 5 used") {
  const Matrix X = friedman1_features(200, 3);
  CHECK(X.rows() == 200);
  CHECK(X.cols() == 10);
  CHECK(X.minCoeff() >= 0.0);
  CHECK(X.maxCoeff() < 1.0);

  // Perturbing the last five columns leaves the response untouched.
  Matrix X2 = X;
  X2.rightCols(5).setConstant(0.123);
  CHECK(friedman1_true(X) == friedman1_true(X2));
}

TEST_CASE("friedman noise stream is independent of the noise level") {
  const Dataset quiet = synthetic_friedman1(50, 0.1, 8);
  const Dataset loud = synthetic_friedman1(50, 2.0, 8);
  CHECK(quiet.features == loud.features);
  CHECK(quiet.target != loud.target);

  // Noise scales linearly: (y_sd - f) / sd is the same standard draw.
  const Vector truth = friedman1_true(quiet.features);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double z_quiet = (quiet.target(i) - truth(i)) / 0.1;
    const double z_loud = (loud.target(i) - truth(i)) / 2.0;
    CHECK(z_quiet == doctest::Approx(z_loud).epsilon(1e-9));
  }

  const Dataset noiseless = synthetic_friedman1(50, 0.0, 8);
  CHECK(noiseless.target == truth);
}

TEST_CASE("take_rows selects and reorders") {
  const Dataset ds = synthetic_friedman1(6, 0.5, 2);
  const Dataset sub = take_rows(ds, {4, 1});
  CHECK(sub.n() == 2);
  CHECK(sub.features.row(0) == ds.features.row(4));
  CHECK(sub.features.row(1) == ds.features.row(1));
  CHECK(sub.target(0) == ds.target(4));
  CHECK(sub.target(1) == ds.target(1));
  CHECK(sub.feature_names == ds.feature_names);
}

TEST_CASE("format_float17 round-trips doubles exactly") {
  const std::vector<double> values = {0.0,    1.0,   -1.0,        1.0 / 3.0, M_PI,
                                      1e-300, 1e300, 0.1 + 0.2,   -0.0,      123456.789};
  for (double v : values) {
    const std::string s = format_float17(v);
    CHECK(std::stod(s) == v);
  }
}
