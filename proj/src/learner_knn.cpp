#include "learners_impl.hpp"

#include <algorithm>
#include <stdexcept>

namespace gemith::detail {

namespace {

/// Brute-force k-nearest-neighbour averaging. Distance ties at the k-th
/// neighbour include every tied point, which keeps the prediction
/// independent of row order.
class KnnModel final : public Model {
 public:
  KnnModel(Matrix X, Vector y, int k) : X_(std::move(X)), y_(std::move(y)), k_(k) {}

  Vector predict(const Matrix& Q) const override {
    const Eigen::Index n = X_.rows();
    const int k = std::min<Eigen::Index>(k_, n);
    Vector out(Q.rows());
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Eigen::Index q = 0; q < Q.rows(); ++q) {
      for (Eigen::Index i = 0; i < n; ++i)
        dist[static_cast<std::size_t>(i)] = (X_.row(i) - Q.row(q)).squaredNorm();
      std::vector<double> sorted = dist;
      std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
      const double kth = sorted[static_cast<std::size_t>(k - 1)];
      double sum = 0.0;
      std::size_t count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (dist[static_cast<std::size_t>(i)] <= kth) {
          sum += y_(i);
          ++count;
        }
      }
      out(q) = sum / static_cast<double>(count);
    }
    return out;
  }

  Eigen::Index input_dim() const override { return X_.cols(); }

 private:
  Matrix X_;
  Vector y_;
  int k_;
};

}  // namespace

std::unique_ptr<Model> fit_knn(const HyperConfig& config, const Matrix& X, const Vector& y) {
  const int k = config.at_int("n_neighbors");
  if (k < 1) throw std::invalid_argument("knn: n_neighbors must be >= 1");
  return std::make_unique<KnnModel>(X, y, k);
}

}  // namespace gemith::detail
