#pragma once

#include "gemith/dataset.hpp"
#include "gemith/oob.hpp"

#include <cstddef>
#include <limits>

namespace gemith {

/// A point on the probability simplex (entries nonnegative, summing to 1)
/// with the blend MSE it achieves. When collinear columns make the
/// minimizer non-unique, `w` is one optimal solution; only `objective` is
/// contractual.
struct SimplexWeights {
  Vector w;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  bool converged = false;
};

/// Mean squared error of the blend: (1/n) * ||columns * w - y||^2,
/// evaluated directly (no Gram shortcut). Throws on length mismatch.
double ensemble_mse(const Vector& w, const Matrix& columns, const Vector& y);
double ensemble_mse(const Vector& w, const OobMatrix& m);

/// Euclidean projection onto the probability simplex (sort-based
/// threshold method). Idempotent on simplex points.
Vector project_to_simplex(const Vector& v);

/// First-order optimality report for min w'Gw - 2g'w on the simplex.
/// At an optimum the gradient is equal across coordinates with positive
/// weight, and no smaller on the zero-weight coordinates.
struct KktReport {
  double active_gradient_spread = 0.0;  // max - min over active coordinates
  double inactive_slack = 0.0;          // min inactive gradient - max active gradient
  std::size_t active_count = 0;
  bool ok = false;
};

KktReport check_kkt(const Matrix& gram, const Vector& moment, const Vector& w,
                    double grad_tol = 1e-6, double active_tol = 1e-10);

/// Minimize w'Gw - 2'g w + constant over the simplex by projected gradient
/// descent: step 1/L with L = 2*trace(G) (an upper bound on twice the top
/// eigenvalue, G being PSD), stopping when the infinity-norm step drops
/// below 1e-12 or after 100,000 iterations. The reported objective is the
/// quadratic form plus `constant`.
SimplexWeights solve_simplex_qp(const Matrix& gram, const Vector& moment, double constant);

/// Optimal blend weights for a set of out-of-fold columns: builds
/// G = C'C/n and g = C'y/n, solves the QP, then re-evaluates the returned
/// point directly so `objective` is the exact blend MSE. The optimum is
/// global (convex program); it never exceeds any vertex (single column)
/// or the uniform blend.
SimplexWeights solve_gem_weights(const Matrix& columns, const Vector& y);
SimplexWeights solve_gem_weights(const OobMatrix& m);

}  // namespace gemith
