#include "learners_impl.hpp"

#include "cart.hpp"
#include "gemith/parallel.hpp"
#include "gemith/rng.hpp"

#include <cmath>
#include <numeric>

namespace gemith::detail {

namespace {

class TreeModel final : public Model {
 public:
  TreeModel(CartTree tree, Eigen::Index p) : tree_(std::move(tree)), p_(p) {}
  Vector predict(const Matrix& X) const override { return tree_.predict(X); }
  Eigen::Index input_dim() const override { return p_; }

 private:
  CartTree tree_;
  Eigen::Index p_;
};

class ForestModel final : public Model {
 public:
  ForestModel(std::vector<CartTree> trees, Eigen::Index p)
      : trees_(std::move(trees)), p_(p) {}

  Vector predict(const Matrix& X) const override {
    Vector out(X.rows());
    // Per-row sum over trees in index order: the result is the same no
    // matter how rows are scheduled.
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double sum = 0.0;
      for (const auto& tree : trees_) sum += tree.predict_row(X, i);
      out(i) = sum / static_cast<double>(trees_.size());
    }
    return out;
  }
  Eigen::Index input_dim() const override { return p_; }

 private:
  std::vector<CartTree> trees_;
  Eigen::Index p_;
};

class BoostedModel final : public Model {
 public:
  BoostedModel(double base, std::vector<CartTree> trees, double learning_rate, Eigen::Index p)
      : base_(base), trees_(std::move(trees)), learning_rate_(learning_rate), p_(p) {}

  Vector predict(const Matrix& X) const override {
    Vector out = Vector::Constant(X.rows(), base_);
    for (const auto& tree : trees_)
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        out(i) += learning_rate_ * tree.predict_row(X, i);
    return out;
  }
  Eigen::Index input_dim() const override { return p_; }

 private:
  double base_;
  std::vector<CartTree> trees_;
  double learning_rate_;
  Eigen::Index p_;
};

}  // namespace

std::unique_ptr<Model> fit_tree(const HyperConfig& config, const Matrix& X, const Vector& y) {
  CartOptions options;
  options.max_depth = config.at_int("max_depth");
  std::vector<int> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  CartTree tree;
  tree.fit(X, y, rows, options, nullptr);
  return std::make_unique<TreeModel>(std::move(tree), X.cols());
}

std::unique_ptr<Model> fit_random_forest(const HyperConfig& config, const Matrix& X,
                                         const Vector& y, std::uint64_t seed) {
  const int n_trees = config.at_int("n_estimators");
  CartOptions options;
  options.max_depth = config.at_int("max_depth");
  options.features_per_split =
      static_cast<int>(std::ceil(static_cast<double>(X.cols()) / 3.0));

  const std::size_t n = static_cast<std::size_t>(X.rows());
  std::vector<CartTree> trees(static_cast<std::size_t>(n_trees));
  parallel_for(trees.size(), [&](std::size_t t) {
    // Each tree owns a derived stream, so results do not depend on how
    // trees are scheduled across threads.
    Rng rng(derive_seed(seed, 0x666F72657374ULL, t));  // "forest"
    std::vector<int> bootstrap(n);
    for (auto& r : bootstrap) r = static_cast<int>(rng.below(n));
    trees[t].fit(X, y, bootstrap, options, &rng);
  });
  return std::make_unique<ForestModel>(std::move(trees), X.cols());
}

std::unique_ptr<Model> fit_gradient_boosting(const HyperConfig& config, const Matrix& X,
                                             const Vector& y) {
  const int n_trees = config.at_int("n_estimators");
  const double learning_rate = config.at("learning_rate");
  CartOptions options;
  options.max_depth = 3;  // stumps-plus; only count and step size are tuned

  const double base = y.mean();
  Vector residual = y.array() - base;
  std::vector<int> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);

  std::vector<CartTree> trees;
  trees.reserve(static_cast<std::size_t>(n_trees));
  for (int t = 0; t < n_trees; ++t) {
    CartTree tree;
    tree.fit(X, residual, rows, options, nullptr);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      residual(i) -= learning_rate * tree.predict_row(X, i);
    trees.push_back(std::move(tree));
  }
  return std::make_unique<BoostedModel>(base, std::move(trees), learning_rate, X.cols());
}

}  // namespace gemith::detail
