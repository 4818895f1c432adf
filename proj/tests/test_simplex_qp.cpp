#include "gemith/simplex_qp.hpp"

#include "gemith/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace gemith;

namespace {

/// Uniform draw from the simplex (normalized unit-rate exponentials).
Vector random_simplex_point(Eigen::Index k, Rng& rng) {
  Vector w(k);
  for (Eigen::Index j = 0; j < k; ++j) w[j] = -std::log(1.0 - rng.uniform01());
  return w / w.sum();
}

/// Small-magnitude random instance: curvature low enough that a 1e-3 grid
/// point sits within 1e-6 of the optimum in objective value.
struct Instance {
  Matrix columns;
  Vector y;
};

Instance random_instance(Eigen::Index n, Eigen::Index k, Rng& rng) {
  Instance inst;
  inst.columns.resize(n, k);
  inst.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inst.y[i] = rng.uniform(-0.5, 0.5);
    for (Eigen::Index j = 0; j < k; ++j) inst.columns(i, j) = rng.uniform(-0.5, 0.5);
  }
  return inst;
}

/// Exhaustive objective minimum over the k=3 grid w1, w2 in steps of `step`.
double grid_min_k3(const Matrix& columns, const Vector& y, double step) {
  const double n = static_cast<double>(columns.rows());
  const Matrix gram = (columns.transpose() * columns) / n;
  const Vector moment = (columns.transpose() * y) / n;
  const double constant = y.squaredNorm() / n;

  double best = std::numeric_limits<double>::infinity();
  const int cells = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= cells; ++i) {
    for (int j = 0; j <= cells - i; ++j) {
      Vector w(3);
      w << i * step, j * step, 1.0 - i * step - j * step;
      const double value = w.dot(gram * w) - 2.0 * moment.dot(w) + constant;
      best = std::min(best, value);
    }
  }
  return best;
}

void check_on_simplex(const Vector& w) {
  for (Eigen::Index j = 0; j < w.size(); ++j) CHECK(w[j] >= 0.0);
  CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
}

}  // namespace

TEST_CASE("blend error at a vertex is that column's own error") {
  Rng rng(1);
  const Instance inst = random_instance(20, 3, rng);
  for (Eigen::Index j = 0; j < 3; ++j) {
    Vector e = Vector::Zero(3);
    e[j] = 1.0;
    const double direct =
        (inst.columns.col(j) - inst.y).squaredNorm() / static_cast<double>(inst.y.size());
    CHECK(ensemble_mse(e, inst.columns, inst.y) == doctest::Approx(direct).epsilon(1e-15));
  }
}

TEST_CASE("symmetric errors cancel at equal weights") {
  Vector y(4);
  y << 1, 2, 3, 4;
  Matrix columns(4, 2);
  columns.col(0) = y.array() + 0.1;
  columns.col(1) = y.array() - 0.1;
  Vector w(2);
  w << 0.5, 0.5;
  CHECK(ensemble_mse(w, columns, y) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("a constant residual of 0.1 costs 0.01 in mean square") {
  Vector y(3);
  y << 1, 2, 3;
  Matrix columns(3, 2);
  columns.col(0) = y.array() + 0.1;
  columns.col(1) = y.array() - 0.2;
  Vector w(2);
  w << 1.0, 0.0;
  CHECK(ensemble_mse(w, columns, y) == doctest::Approx(0.01).epsilon(1e-12));

  Vector too_long(3);
  CHECK_THROWS_AS(ensemble_mse(too_long, columns, y), std::invalid_argument);
}

TEST_CASE("projection leaves simplex points untouched") {
  Vector v(3);
  v << 0.2, 0.3, 0.5;
  const Vector w = project_to_simplex(v);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(w[j] == doctest::Approx(v[j]).epsilon(1e-14));
}

TEST_CASE("projection clamps to the nearest vertex or face") {
  Vector a(2);
  a << 2.0, 0.0;
  const Vector pa = project_to_simplex(a);
  CHECK(pa[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pa[1] == doctest::Approx(0.0).epsilon(1e-14));

  Vector b(2);
  b << 0.6, 0.6;
  const Vector pb = project_to_simplex(b);
  CHECK(pb[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pb[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("projection is Euclidean-nearest against sampled competitors") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Vector v(4);
    for (Eigen::Index j = 0; j < 4; ++j) v[j] = rng.uniform(-2.0, 2.0);
    const Vector p = project_to_simplex(v);
    check_on_simplex(p);
    const double own = (p - v).squaredNorm();
    for (int s = 0; s < 500; ++s) {
      const Vector u = random_simplex_point(4, rng);
      CHECK(own <= (u - v).squaredNorm() + 1e-12);
    }
  }
}

TEST_CASE("projection stays exact for extreme magnitudes") {
  Vector v(3);
  v << 1e12, -1e12, 3.0;
  const Vector w = project_to_simplex(v);
  check_on_simplex(w);
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));

  Vector neg(3);
  neg << -5.0, -6.0, -7.0;
  check_on_simplex(project_to_simplex(neg));

  Vector bad(2);
  bad << std::numeric_limits<double>::quiet_NaN(), 0.0;
  CHECK_THROWS_AS(project_to_simplex(bad), std::invalid_argument);
}

TEST_CASE("a single column gets weight one and its own error") {
  Rng rng(3);
  const Instance inst = random_instance(15, 1, rng);
  const SimplexWeights sol = solve_gem_weights(inst.columns, inst.y);
  CHECK(sol.w.size() == 1);
  CHECK(sol.w[0] == doctest::Approx(1.0).epsilon(1e-14));
  const double direct =
      (inst.columns.col(0) - inst.y).squaredNorm() / static_cast<double>(inst.y.size());
  CHECK(sol.objective == doctest::Approx(direct).epsilon(1e-15));
  CHECK(sol.converged);
}

TEST_CASE("a perfect column takes all the weight") {
  Rng rng(4);
  Vector y(12);
  Matrix columns(12, 2);
  for (Eigen::Index i = 0; i < 12; ++i) {
    y[i] = rng.uniform(0.0, 1.0);
    columns(i, 0) = y[i];
    columns(i, 1) = y[i] + rng.normal(0.0, 0.3);
  }
  const SimplexWeights sol = solve_gem_weights(columns, y);
  CHECK(sol.w[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sol.objective <= 1e-9);
}

TEST_CASE("opposing constant residuals solve to two-thirds one-third") {
  Vector y(3);
  y << 1, 2, 3;
  Matrix columns(3, 2);
  columns.col(0) = y.array() + 0.1;
  columns.col(1) = y.array() - 0.2;

  const SimplexWeights sol = solve_gem_weights(columns, y);
  CHECK(sol.w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
  CHECK(sol.w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
  CHECK(sol.objective <= 1e-12);
  check_on_simplex(sol.w);

  // Interior optimum: both coordinates active, gradients equal.
  const double n = 3.0;
  const Matrix gram = (columns.transpose() * columns) / n;
  const Vector moment = (columns.transpose() * y) / n;
  const KktReport kkt = check_kkt(gram, moment, sol.w);
  CHECK(kkt.active_count == 2);
  CHECK(kkt.ok);
  CHECK(kkt.active_gradient_spread <= 1e-6);
}

TEST_CASE("solver matches a brute-force grid on random three-column instances") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance inst = random_instance(30, 3, rng);
    const SimplexWeights sol = solve_gem_weights(inst.columns, inst.y);
    const double grid = grid_min_k3(inst.columns, inst.y, 1e-3);
    CHECK(sol.objective <= grid + 1e-9);          // grid points are feasible
    CHECK(std::abs(sol.objective - grid) <= 1e-6);  // grid resolution bound
    check_on_simplex(sol.w);
  }
}

TEST_CASE("solver dominates vertices, the uniform blend, and sampled points") {
  Rng rng(6);
  const Instance inst = random_instance(40, 4, rng);
  const SimplexWeights sol = solve_gem_weights(inst.columns, inst.y);

  for (Eigen::Index j = 0; j < 4; ++j) {
    Vector e = Vector::Zero(4);
    e[j] = 1.0;
    CHECK(sol.objective <= ensemble_mse(e, inst.columns, inst.y) + 1e-9);
  }
  const Vector uniform = Vector::Constant(4, 0.25);
  CHECK(sol.objective <= ensemble_mse(uniform, inst.columns, inst.y) + 1e-9);

  for (int s = 0; s < 10000; ++s) {
    const Vector u = random_simplex_point(4, rng);
    CHECK(sol.objective <= ensemble_mse(u, inst.columns, inst.y) + 1e-9);
  }
}

TEST_CASE("rescaling the instance rescales the objective, not the weights") {
  Rng rng(7);
  const Instance inst = random_instance(25, 3, rng);
  const SimplexWeights base = solve_gem_weights(inst.columns, inst.y);

  const double c = 3.7;
  const SimplexWeights scaled = solve_gem_weights(inst.columns * c, Vector(inst.y * c));
  for (Eigen::Index j = 0; j < 3; ++j)
    CHECK(scaled.w[j] == doctest::Approx(base.w[j]).epsilon(1e-8));
  CHECK(scaled.objective == doctest::Approx(base.objective * c * c).epsilon(1e-9));
}

TEST_CASE("duplicating a column cannot change the optimal value") {
  Rng rng(8);
  const Instance inst = random_instance(30, 3, rng);
  const SimplexWeights base = solve_gem_weights(inst.columns, inst.y);

  Matrix wide(30, 4);
  wide.leftCols(3) = inst.columns;
  wide.col(3) = inst.columns.col(1);
  const SimplexWeights dup = solve_gem_weights(wide, inst.y);
  CHECK(std::abs(dup.objective - base.objective) <= 1e-9);
}

TEST_CASE("the blend objective is convex along every chord") {
  Rng rng(9);
  const Instance inst = random_instance(20, 4, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector a = random_simplex_point(4, rng);
    const Vector b = random_simplex_point(4, rng);
    const double fa = ensemble_mse(a, inst.columns, inst.y);
    const double fb = ensemble_mse(b, inst.columns, inst.y);
    for (double t : {0.25, 0.5, 0.75}) {
      const Vector mid = t * a + (1.0 - t) * b;
      CHECK(ensemble_mse(mid, inst.columns, inst.y) <= t * fa + (1.0 - t) * fb + 1e-12);
    }
  }
}

TEST_CASE("kkt report flags active-set structure at a boundary optimum") {
  // Column 0 equals y, so the optimum pins w = (1, 0): one active
  // coordinate, and the inactive gradient must not undercut it.
  Vector y(10);
  Matrix columns(10, 2);
  Rng rng(10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    y[i] = rng.uniform(0.0, 1.0);
    columns(i, 0) = y[i];
    columns(i, 1) = y[i] + 0.5;
  }
  const SimplexWeights sol = solve_gem_weights(columns, y);
  const Matrix gram = (columns.transpose() * columns) / 10.0;
  const Vector moment = (columns.transpose() * y) / 10.0;
  const KktReport kkt = check_kkt(gram, moment, sol.w);
  CHECK(kkt.active_count == 1);
  CHECK(kkt.inactive_slack >= -1e-6);
  CHECK(kkt.ok);
}

TEST_CASE("degenerate and invalid inputs are handled") {
  // All-zero columns: constant objective, uniform point returned.
  Matrix zeros = Matrix::Zero(5, 3);
  Vector y = Vector::Ones(5);
  const SimplexWeights sol = solve_gem_weights(zeros, y);
  check_on_simplex(sol.w);
  CHECK(sol.converged);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-15));

  Matrix bad = Matrix::Ones(3, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_gem_weights(bad, Vector::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(solve_gem_weights(Matrix::Ones(3, 2), Vector::Ones(2)), std::invalid_argument);
}
