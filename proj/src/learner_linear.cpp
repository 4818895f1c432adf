#include "learners_impl.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace gemith::detail {

namespace {

class LinearModel final : public Model {
 public:
  LinearModel(Vector coef, double intercept)
      : coef_(std::move(coef)), intercept_(intercept) {}

  Vector predict(const Matrix& X) const override {
    return (X * coef_).array() + intercept_;
  }
  Eigen::Index input_dim() const override { return coef_.size(); }

 private:
  Vector coef_;
  double intercept_;
};

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

std::unique_ptr<Model> fit_ridge(const HyperConfig& config, const Matrix& X, const Vector& y) {
  const double alpha = config.at("alpha");
  const Vector x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Matrix Xc = X.rowwise() - x_mean.transpose();
  const Vector yc = y.array() - y_mean;

  // Intercept unpenalized via centering: (Xc'Xc + alpha I) beta = Xc'yc.
  Matrix A = Xc.transpose() * Xc;
  A.diagonal().array() += alpha;
  const Vector b = Xc.transpose() * yc;
  Vector beta = A.ldlt().solve(b);

  const double scale = std::max({1.0, A.norm(), b.norm()});
  if (!beta.allFinite() || (A * beta - b).norm() > 1e-8 * scale)
    throw std::runtime_error(
        "ridge: singular normal equations (alpha too small on rank-deficient features)");

  const double intercept = y_mean - beta.dot(x_mean);
  return std::make_unique<LinearModel>(std::move(beta), intercept);
}

std::unique_ptr<Model> fit_elastic_net(const HyperConfig& config, const Matrix& X,
                                       const Vector& y) {
  const double alpha = config.at("alpha");
  const double l1_ratio = config.at("l1_ratio");
  const Eigen::Index n = X.rows(), p = X.cols();

  // Standardized internals: unit-variance columns, centered target. The
  // objective (1/2n)||ys - Xs b||^2 + alpha*(l1|b|_1 + (1-l1)/2 |b|^2)
  // lives in this internal space; coefficients map back at the end.
  const Vector x_mean = X.colwise().mean();
  Vector x_scale(p);
  Matrix Xs(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var =
        (X.col(j).array() - x_mean(j)).square().sum() / static_cast<double>(n);
    x_scale(j) = var > 0 ? std::sqrt(var) : 1.0;
    Xs.col(j) = (X.col(j).array() - x_mean(j)) / x_scale(j);
  }
  const double y_mean = y.mean();
  const Vector ys = y.array() - y_mean;

  Vector beta = Vector::Zero(p);
  Vector residual = ys;  // ys - Xs*beta, maintained incrementally
  const double l1_penalty = alpha * l1_ratio;
  const double l2_penalty = alpha * (1.0 - l1_ratio);
  Vector col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j)
    col_sq(j) = Xs.col(j).squaredNorm() / static_cast<double>(n);

  constexpr int kMaxSweeps = 10000;
  constexpr double kTol = 1e-8;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;  // constant column
      const double old = beta(j);
      const double rho =
          Xs.col(j).dot(residual) / static_cast<double>(n) + col_sq(j) * old;
      const double updated = soft_threshold(rho, l1_penalty) / (col_sq(j) + l2_penalty);
      if (updated != old) {
        residual += Xs.col(j) * (old - updated);
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    if (max_change < kTol) break;
  }

  Vector coef(p);
  for (Eigen::Index j = 0; j < p; ++j) coef(j) = beta(j) / x_scale(j);
  const double intercept = y_mean - coef.dot(x_mean);
  return std::make_unique<LinearModel>(std::move(coef), intercept);
}

}  // namespace gemith::detail
