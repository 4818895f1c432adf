#pragma once

#include "gemith/dataset.hpp"
#include "gemith/rng.hpp"

#include <vector>

namespace gemith::detail {

struct CartOptions {
  int max_depth = 6;
  int features_per_split = 0;  // 0 = consider every feature
};

/// Regression CART with variance-reduction splits. Thresholds are
/// midpoints of adjacent distinct sorted values; equal-gain ties resolve
/// to the lowest feature index, then the lowest threshold, so a fit is a
/// pure function of (data, rows, options, rng draws).
class CartTree {
 public:
  /// rng supplies per-node feature subsets and may be null when
  /// features_per_split == 0. Draws are consumed in depth-first build
  /// order (left child first).
  void fit(const Matrix& X, const Vector& y, const std::vector<int>& rows,
           const CartOptions& options, Rng* rng);

  double predict_row(const Matrix& X, Eigen::Index row) const;
  Vector predict(const Matrix& X) const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(const Matrix& X, const Vector& y, std::vector<int>& rows, int depth,
            const CartOptions& options, Rng* rng);

  std::vector<Node> nodes_;
};

}  // namespace gemith::detail
