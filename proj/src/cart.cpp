#include "cart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gemith::detail {

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // SSE_left + SSE_right
};

}  // namespace

void CartTree::fit(const Matrix& X, const Vector& y, const std::vector<int>& rows,
                   const CartOptions& options, Rng* rng) {
  if (rows.empty()) throw std::invalid_argument("cart: no training rows");
  nodes_.clear();
  std::vector<int> work = rows;
  build(X, y, work, 0, options, rng);
}

int CartTree::build(const Matrix& X, const Vector& y, std::vector<int>& rows, int depth,
                    const CartOptions& options, Rng* rng) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  double sum = 0.0, sum_sq = 0.0;
  for (int r : rows) {
    sum += y(r);
    sum_sq += y(r) * y(r);
  }
  const double count = static_cast<double>(rows.size());
  nodes_[index].value = sum / count;
  const double node_sse = sum_sq - sum * sum / count;

  if (depth >= options.max_depth || rows.size() < 2 || node_sse <= 0.0) return index;

  // Candidate features, ascending so equal-gain ties land on the lowest index.
  const int p = static_cast<int>(X.cols());
  std::vector<int> candidates;
  if (options.features_per_split > 0 && options.features_per_split < p) {
    std::vector<int> all(p);
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < options.features_per_split; ++i) {
      const int j = i + static_cast<int>(rng->below(static_cast<std::uint64_t>(p - i)));
      std::swap(all[i], all[j]);
    }
    candidates.assign(all.begin(), all.begin() + options.features_per_split);
    std::sort(candidates.begin(), candidates.end());
  } else {
    candidates.resize(p);
    std::iota(candidates.begin(), candidates.end(), 0);
  }

  SplitChoice best;
  std::vector<std::pair<double, double>> points(rows.size());  // (x, y) sorted by x
  for (int feature : candidates) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      points[i] = {X(rows[i], feature), y(rows[i])};
    std::sort(points.begin(), points.end());

    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
      left_sum += points[i - 1].second;
      left_sq += points[i - 1].second * points[i - 1].second;
      if (points[i].first == points[i - 1].first) continue;
      const double nl = static_cast<double>(i);
      const double nr = count - nl;
      const double right_sum = sum - left_sum;
      const double right_sq = sum_sq - left_sq;
      const double score = (left_sq - left_sum * left_sum / nl) +
                           (right_sq - right_sum * right_sum / nr);
      if (score < best.score) {
        best.score = score;
        best.feature = feature;
        best.threshold = 0.5 * (points[i - 1].first + points[i].first);
      }
    }
  }
  if (best.feature < 0) return index;  // every candidate feature constant

  std::vector<int> left, right;
  left.reserve(rows.size());
  right.reserve(rows.size());
  for (int r : rows) {
    if (X(r, best.feature) <= best.threshold)
      left.push_back(r);
    else
      right.push_back(r);
  }
  if (left.empty() || right.empty()) return index;  // midpoint rounded onto a bound

  nodes_[index].feature = best.feature;
  nodes_[index].threshold = best.threshold;
  rows.clear();
  rows.shrink_to_fit();
  const int left_index = build(X, y, left, depth + 1, options, rng);
  const int right_index = build(X, y, right, depth + 1, options, rng);
  nodes_[index].left = left_index;
  nodes_[index].right = right_index;
  return index;
}

double CartTree::predict_row(const Matrix& X, Eigen::Index row) const {
  int node = 0;
  while (nodes_[node].feature >= 0) {
    node = X(row, nodes_[node].feature) <= nodes_[node].threshold ? nodes_[node].left
                                                                  : nodes_[node].right;
  }
  return nodes_[node].value;
}

Vector CartTree::predict(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X, i);
  return out;
}

}  // namespace gemith::detail
