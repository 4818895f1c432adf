#include "gemith/dataset.hpp"

#include "gemith/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gemith {

std::string format_float17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

void Dataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1)
    throw std::invalid_argument("dataset: need at least one row and one feature");
  if (target.size() != features.rows())
    throw std::invalid_argument("dataset: target length does not match row count");
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols())
    throw std::invalid_argument("dataset: feature_names length does not match column count");
  std::set<std::string> seen(feature_names.begin(), feature_names.end());
  if (static_cast<Eigen::Index>(seen.size()) != features.cols())
    throw std::invalid_argument("dataset: duplicate feature names");
  if (!features.allFinite() || !target.allFinite())
    throw std::invalid_argument("dataset: NaN or Inf entry");
}

std::size_t FoldPlan::fold_size(std::uint32_t fold) const {
  return static_cast<std::size_t>(
      std::count(assignment.begin(), assignment.end(), fold));
}

std::uint64_t FoldPlan::content_hash() const {
  std::uint64_t h = derive_seed(0x9D46F5C1A3B2E807ULL, n, fold_count);
  for (std::uint32_t a : assignment) h = derive_seed(h, a);
  return h;
}

void FoldPlan::validate() const {
  if (fold_count < 2 || fold_count > n)
    throw std::invalid_argument("fold plan: need 2 <= folds <= n");
  if (assignment.size() != n)
    throw std::invalid_argument("fold plan: assignment length mismatch");
  std::vector<std::size_t> sizes(fold_count, 0);
  for (std::uint32_t a : assignment) {
    if (a >= fold_count) throw std::invalid_argument("fold plan: fold index out of range");
    ++sizes[a];
  }
  auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  if (*lo == 0) throw std::invalid_argument("fold plan: empty fold");
  if (*hi - *lo > 1) throw std::invalid_argument("fold plan: fold sizes differ by more than 1");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string s = trim(raw);
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("csv: cannot parse cell \"" + raw + "\" at data row " +
                             std::to_string(row) + ", column \"" + column + "\"");
  return value;
}

Dataset load_csv_impl(const std::string& path, const std::string* target_name,
                      std::size_t target_index) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open file " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: missing header row in " + path);
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);

  if (target_name != nullptr) {
    auto it = std::find(header.begin(), header.end(), *target_name);
    if (it == header.end())
      throw std::runtime_error("csv: target column \"" + *target_name + "\" not in header");
    target_index = static_cast<std::size_t>(it - header.begin());
  } else if (target_index >= header.size()) {
    throw std::runtime_error("csv: target index " + std::to_string(target_index) +
                             " out of range for " + std::to_string(header.size()) + " columns");
  }

  Dataset ds;
  ds.target_name = header[target_index];
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != target_index) ds.feature_names.push_back(header[j]);

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("csv: data row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    std::vector<double> feats;
    feats.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v = parse_cell(cells[j], row, header[j]);
      if (j == target_index)
        targets.push_back(v);
      else
        feats.push_back(v);
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw std::runtime_error("csv: no data rows in " + path);

  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(header.size() - 1));
  ds.target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < header.size(); ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.target(static_cast<Eigen::Index>(i)) = targets[i];
  }
  ds.validate();
  return ds;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column) {
  return load_csv_impl(path, &target_column, 0);
}

Dataset load_csv(const std::string& path, std::size_t target_index) {
  return load_csv_impl(path, nullptr, target_index);
}

void save_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
  for (const std::string& name : ds.feature_names) out << name << ',';
  out << (ds.target_name.empty() ? "y" : ds.target_name) << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.p(); ++j) out << format_float17(ds.features(i, j)) << ',';
    out << format_float17(ds.target(i)) << '\n';
  }
  if (!out) throw std::runtime_error("csv: write to '" + path + "' failed");
}

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.target_name = ds.target_name;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.p());
  out.target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        ds.features.row(static_cast<Eigen::Index>(rows[i]));
    out.target(static_cast<Eigen::Index>(i)) = ds.target(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction,
                                             std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(ds.n());
  if (n < 2) throw std::invalid_argument("train_test_split: need n >= 2");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("train_test_split: fraction must be in (0, 1)");
  const std::size_t n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n - n_test < 2)
    throw std::invalid_argument("train_test_split: fraction yields empty split (test " +
                                std::to_string(n_test) + ", train " +
                                std::to_string(n - n_test) + ")");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x73706C6974ULL));  // "split"
  rng.shuffle(order);

  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<long>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<long>(n_test), order.end());
  // Keep original row order inside each side; only membership is random.
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {take_rows(ds, train), take_rows(ds, test)};
}

FoldPlan make_fold_plan(std::size_t n, std::size_t fold_count, std::uint64_t seed) {
  if (fold_count < 2 || fold_count > n)
    throw std::invalid_argument("make_fold_plan: need 2 <= folds <= n, got folds=" +
                                std::to_string(fold_count) + " n=" + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x666F6C6473ULL));  // "folds"
  rng.shuffle(order);

  FoldPlan plan;
  plan.n = n;
  plan.fold_count = fold_count;
  plan.seed = seed;
  plan.assignment.assign(n, 0);
  // First (n mod m) folds take the extra row.
  const std::size_t base = n / fold_count, extra = n % fold_count;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < fold_count; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i)
      plan.assignment[order[pos++]] = static_cast<std::uint32_t>(f);
  }
  plan.validate();
  return plan;
}

Scaler standardize_fit(const Dataset& ds) {
  const double n = static_cast<double>(ds.n());
  Scaler s;
  s.mean = ds.features.colwise().mean();
  s.stddev.resize(ds.p());
  for (Eigen::Index j = 0; j < ds.p(); ++j) {
    const double var = (ds.features.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.stddev(j) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Dataset standardize_apply(const Scaler& scaler, const Dataset& ds) {
  if (scaler.mean.size() != ds.p())
    throw std::invalid_argument("standardize_apply: scaler fitted for p=" +
                                std::to_string(scaler.mean.size()) + ", dataset has p=" +
                                std::to_string(ds.p()));
  Dataset out = ds;
  for (Eigen::Index j = 0; j < ds.p(); ++j)
    out.features.col(j) = (ds.features.col(j).array() - scaler.mean(j)) / scaler.stddev(j);
  return out;
}

Matrix friedman1_features(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("friedman1: need n >= 1");
  Matrix X(static_cast<Eigen::Index>(n), 10);
  Rng rng(derive_seed(seed, 0x66726431ULL));  // "frd1"
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < 10; ++j) X(i, j) = rng.uniform01();
  return X;
}

Vector friedman1_true(const Matrix& X) {
  if (X.cols() < 5) throw std::invalid_argument("friedman1_true: need at least 5 columns");
  Vector y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    y(i) = 10.0 * std::sin(M_PI * X(i, 0) * X(i, 1)) + 20.0 * (X(i, 2) - 0.5) * (X(i, 2) - 0.5) +
           10.0 * X(i, 3) + 5.0 * X(i, 4);
  }
  return y;
}

Dataset synthetic_friedman1(std::size_t n, double noise_sd, std::uint64_t seed) {
  if (noise_sd < 0) throw std::invalid_argument("friedman1: noise_sd must be >= 0");
  Dataset ds;
  ds.features = friedman1_features(n, seed);
  ds.target = friedman1_true(ds.features);
  Rng noise(derive_seed(seed, 0x6E6F697365ULL));  // "noise"
  for (Eigen::Index i = 0; i < ds.target.size(); ++i)
    ds.target(i) += noise_sd * noise.normal();
  ds.feature_names.clear();
  for (int j = 1; j <= 10; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  ds.target_name = "y";
  ds.validate();
  return ds;
}

}  // namespace gemith
