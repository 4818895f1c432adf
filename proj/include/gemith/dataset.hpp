#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace gemith {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Scientific notation at 17 significant digits: enough to round-trip any
/// double exactly, and the rendering behind canonical serializations.
std::string format_float17(double v);

/// A loaded regression dataset: n x p features plus an aligned target.
struct Dataset {
  Matrix features;
  Vector target;
  std::vector<std::string> feature_names;
  std::string target_name;

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index p() const { return features.cols(); }

  /// Throws std::invalid_argument on shape mismatch, NaN/Inf entries,
  /// duplicate feature names, or an empty dataset.
  void validate() const;
};

/// Deterministic assignment of n rows to fold_count cross-validation folds.
/// Fold sizes differ by at most one.
struct FoldPlan {
  std::size_t n = 0;
  std::size_t fold_count = 0;
  std::vector<std::uint32_t> assignment;  // per row, in [0, fold_count)
  std::uint64_t seed = 0;

  std::size_t fold_size(std::uint32_t fold) const;
  /// Hash of (n, fold_count, assignment contents); independent of seed so
  /// hand-built plans with the same assignment compare equal.
  std::uint64_t content_hash() const;
  void validate() const;
};

/// Per-feature location/scale fitted on a training split. Population
/// standard deviation; constant columns get stddev 1 so they map to zero
/// instead of NaN.
struct Scaler {
  Vector mean;
  Vector stddev;
};

/// Parse a comma-separated file with a mandatory header row. Decimal
/// point is '.', no quoting. Parse failures name the offending row and
/// column. Overloads select the target column by header name or 0-based
/// index; the target column is removed from the features.
Dataset load_csv(const std::string& path, const std::string& target_column);
Dataset load_csv(const std::string& path, std::size_t target_index);

/// Write features plus target (last column) with a header row, floats at
/// 17 significant digits so load_csv restores the exact values.
void save_csv(const Dataset& ds, const std::string& path);

/// Disjoint row partition with |test| = round(test_fraction * n), shuffled
/// by a seeded Fisher-Yates pass. Throws if either side ends up below the
/// minimum (test >= 1, train >= 2).
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction,
                                             std::uint64_t seed);

FoldPlan make_fold_plan(std::size_t n, std::size_t fold_count, std::uint64_t seed);

Scaler standardize_fit(const Dataset& ds);
/// Returns a copy with z-scored features; the target is untouched.
Dataset standardize_apply(const Scaler& scaler, const Dataset& ds);

/// Feature matrix of the Friedman #1 benchmark: 10 i.i.d. U(0,1) columns,
/// of which only the first five drive the response.
Matrix friedman1_features(std::size_t n, std::uint64_t seed);
/// Noiseless response 10*sin(pi*x1*x2) + 20*(x3-0.5)^2 + 10*x4 + 5*x5.
Vector friedman1_true(const Matrix& X);
/// Features plus response with N(0, noise_sd^2) noise. The noise stream is
/// derived separately from the feature stream, so changing noise_sd never
/// changes the features.
Dataset synthetic_friedman1(std::size_t n, double noise_sd, std::uint64_t seed);

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows);

}  // namespace gemith
