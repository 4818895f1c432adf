#include "gemith/simplex_qp.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gemith {

namespace {

double qp_value(const Matrix& gram, const Vector& moment, const Vector& w) {
  return w.dot(gram * w) - 2.0 * moment.dot(w);
}

/// Refines a near-optimal iterate to a first-order-optimal point. The
/// projected-gradient phase identifies the support quickly but creeps on
/// ill-conditioned faces, so its final gradient spread can stall well above
/// certificate precision. Solving the equality-constrained problem on the
/// identified support lands on that face's optimum directly; classic
/// active-set moves (drop the most negative weight, admit the most
/// undercutting zero coordinate) correct a mis-identified support. Fully
/// deterministic: fixed pivoting, no randomness.
void polish_on_active_face(const Matrix& gram, const Vector& moment, SimplexWeights& result) {
  const Eigen::Index k = gram.rows();
  constexpr double kSupportTol = 1e-10;

  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (result.w[j] > kSupportTol) support.push_back(j);
  }
  if (support.empty()) return;

  const std::size_t max_rounds = 16 + 4 * static_cast<std::size_t>(k);
  for (std::size_t round = 0; round < max_rounds; ++round) {
    // Equality-constrained face problem: gradients equal on the support,
    // weights summing to one.
    const Eigen::Index s = static_cast<Eigen::Index>(support.size());
    Matrix kkt = Matrix::Zero(s + 1, s + 1);
    Vector rhs(s + 1);
    for (Eigen::Index a = 0; a < s; ++a) {
      for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = 2.0 * gram(support[a], support[b]);
      kkt(a, s) = 1.0;
      kkt(s, a) = 1.0;
      rhs[a] = 2.0 * moment[support[a]];
    }
    rhs[s] = 1.0;

    Eigen::FullPivLU<Matrix> lu(kkt);
    Vector sol = lu.solve(rhs);
    const double residual = (kkt * sol - rhs).lpNorm<Eigen::Infinity>();
    if (!sol.allFinite() || residual > 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
      return;  // singular or inconsistent face: keep the iterate we have
    }

    // A negative face weight means the support is too large.
    Eigen::Index leaving = -1;
    double most_negative = 0.0;
    for (Eigen::Index a = 0; a < s; ++a) {
      if (sol[a] < most_negative) {
        most_negative = sol[a];
        leaving = a;
      }
    }
    if (leaving >= 0) {
      if (support.size() == 1) return;
      support.erase(support.begin() + leaving);
      continue;
    }

    Vector candidate = Vector::Zero(k);
    for (Eigen::Index a = 0; a < s; ++a) candidate[support[a]] = sol[a];
    candidate /= candidate.sum();

    Vector grad = 2.0 * (gram * candidate - moment);
    double level = 0.0;
    for (Eigen::Index a = 0; a < s; ++a) level += grad[support[a]];
    level /= static_cast<double>(s);

    // A zero coordinate whose gradient undercuts the face level should
    // have been in the support.
    const double add_tol = 1e-10 * (1.0 + grad.lpNorm<Eigen::Infinity>());
    Eigen::Index entering = -1;
    double lowest = level - add_tol;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (std::binary_search(support.begin(), support.end(), j)) continue;
      if (grad[j] < lowest) {
        lowest = grad[j];
        entering = j;
      }
    }
    if (entering >= 0) {
      support.insert(std::upper_bound(support.begin(), support.end(), entering), entering);
      continue;
    }

    const double current = qp_value(gram, moment, result.w);
    if (qp_value(gram, moment, candidate) <= current + 1e-12 * (1.0 + std::abs(current))) {
      result.w = std::move(candidate);
      result.converged = true;
    }
    return;
  }
}

}  // namespace

double ensemble_mse(const Vector& w, const Matrix& columns, const Vector& y) {
  if (w.size() != columns.cols()) {
    throw std::invalid_argument("ensemble_mse: " + std::to_string(w.size()) + " weights for " +
                                std::to_string(columns.cols()) + " columns");
  }
  if (y.size() != columns.rows()) {
    throw std::invalid_argument("ensemble_mse: target length " + std::to_string(y.size()) +
                                " does not match " + std::to_string(columns.rows()) + " rows");
  }
  if (columns.rows() == 0) throw std::invalid_argument("ensemble_mse: empty matrix");
  return (columns * w - y).squaredNorm() / static_cast<double>(columns.rows());
}

double ensemble_mse(const Vector& w, const OobMatrix& m) {
  return ensemble_mse(w, m.columns, m.y);
}

Vector project_to_simplex(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("project_to_simplex: empty vector");
  if (!v.allFinite()) throw std::invalid_argument("project_to_simplex: non-finite input");
  // Held/Wolfe/Crowder threshold: sort descending, find the largest prefix
  // whose running mean leaves its last element positive after shifting.
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double running = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    running += u[j];
    double candidate = (running - 1.0) / static_cast<double>(j + 1);
    // The first prefix always qualifies (u[0] - (u[0] - 1) = 1), so tau is
    // set at least once.
    if (u[j] - candidate > 0.0) tau = candidate;
  }
  Vector w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    w[i] = std::max(v[i] - tau, 0.0);
  }
  // The shift is exact only in real arithmetic; rescale so the sum is 1 to
  // machine precision even for large-magnitude inputs.
  w /= w.sum();
  return w;
}

KktReport check_kkt(const Matrix& gram, const Vector& moment, const Vector& w, double grad_tol,
                    double active_tol) {
  Vector grad = 2.0 * (gram * w - moment);
  KktReport report;
  double active_min = std::numeric_limits<double>::infinity();
  double active_max = -std::numeric_limits<double>::infinity();
  double inactive_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w[j] > active_tol) {
      ++report.active_count;
      active_min = std::min(active_min, grad[j]);
      active_max = std::max(active_max, grad[j]);
    } else {
      inactive_min = std::min(inactive_min, grad[j]);
    }
  }
  report.active_gradient_spread = report.active_count > 0 ? active_max - active_min : 0.0;
  report.inactive_slack = std::isinf(inactive_min) || report.active_count == 0
                              ? std::numeric_limits<double>::infinity()
                              : inactive_min - active_max;
  report.ok = report.active_count > 0 && report.active_gradient_spread <= grad_tol &&
              report.inactive_slack >= -grad_tol;
  return report;
}

SimplexWeights solve_simplex_qp(const Matrix& gram, const Vector& moment, double constant) {
  const Eigen::Index k = gram.rows();
  if (k == 0 || gram.cols() != k || moment.size() != k) {
    throw std::invalid_argument("solve_simplex_qp: need square k x k Gram with length-k moment");
  }
  if (!gram.allFinite() || !moment.allFinite()) {
    throw std::invalid_argument("solve_simplex_qp: non-finite entries");
  }

  SimplexWeights result;
  result.w = Vector::Constant(k, 1.0 / static_cast<double>(k));

  const double lipschitz = 2.0 * gram.trace();
  if (lipschitz > 0.0 && std::isfinite(lipschitz)) {
    const double step = 1.0 / lipschitz;
    constexpr std::size_t kMaxIterations = 100000;
    constexpr double kStepTol = 1e-12;
    for (std::size_t it = 0; it < kMaxIterations; ++it) {
      Vector grad = 2.0 * (gram * result.w - moment);
      Vector next = project_to_simplex(result.w - step * grad);
      double delta = (next - result.w).lpNorm<Eigen::Infinity>();
      result.w = std::move(next);
      ++result.iterations;
      if (delta < kStepTol) {
        result.converged = true;
        break;
      }
    }
    polish_on_active_face(gram, moment, result);
  } else {
    // trace(G) = 0 means every column is identically zero, so the
    // objective is constant over the simplex; the uniform point is optimal.
    result.converged = true;
  }

  result.objective = result.w.dot(gram * result.w) - 2.0 * moment.dot(result.w) + constant;
  return result;
}

SimplexWeights solve_gem_weights(const Matrix& columns, const Vector& y) {
  if (columns.rows() == 0 || columns.cols() == 0) {
    throw std::invalid_argument("solve_gem_weights: empty matrix");
  }
  if (y.size() != columns.rows()) {
    throw std::invalid_argument("solve_gem_weights: target length mismatch");
  }
  if (!columns.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("solve_gem_weights: non-finite entries");
  }
  const double n = static_cast<double>(columns.rows());
  Matrix gram = (columns.transpose() * columns) / n;
  Vector moment = (columns.transpose() * y) / n;
  SimplexWeights result = solve_simplex_qp(gram, moment, y.squaredNorm() / n);
  result.objective = ensemble_mse(result.w, columns, y);
  return result;
}

SimplexWeights solve_gem_weights(const OobMatrix& m) {
  return solve_gem_weights(m.columns, m.y);
}

}  // namespace gemith
