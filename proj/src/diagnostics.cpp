#include "gemith/diagnostics.hpp"

#include "gemith/parallel.hpp"
#include "gemith/rng.hpp"
#include "gemith/stats.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gemith {

Dataset SyntheticGenerator::sample(std::size_t n, std::uint64_t seed) const {
  Dataset ds;
  ds.features = features(n, seed);
  ds.target = truth(ds.features);
  Rng noise(derive_seed(seed, 0x6E6F697365ULL /* "noise" */));
  double sd = noise_sd();
  for (Eigen::Index i = 0; i < ds.target.size(); ++i) ds.target[i] += sd * noise.normal();
  for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
    ds.feature_names.push_back("x" + std::to_string(j + 1));
  }
  ds.target_name = "y";
  ds.validate();
  return ds;
}

Matrix Friedman1Generator::features(std::size_t n, std::uint64_t seed) const {
  return friedman1_features(n, seed);
}

Vector Friedman1Generator::truth(const Matrix& X) const { return friedman1_true(X); }

Dataset Friedman1Generator::sample(std::size_t n, std::uint64_t seed) const {
  return synthetic_friedman1(n, noise_sd_, seed);
}

BVReport bias_variance_estimate(const FitProcedure& fit_proc, const SyntheticGenerator& gen,
                                std::size_t n_train, std::size_t n_test, std::size_t reps,
                                std::uint64_t seed) {
  if (reps < 2) throw std::invalid_argument("bias_variance: need at least 2 reps");
  if (n_train < 1 || n_test < 1) {
    throw std::invalid_argument("bias_variance: need positive n_train and n_test");
  }

  // One fixed noiseless evaluation grid shared by every rep.
  Matrix X_test = gen.features(n_test, derive_seed(seed, 0x627667726964ULL /* "bvgrid" */));
  Vector f_true = gen.truth(X_test);
  const Eigen::Index m = X_test.rows();
  const double noise_sd = gen.noise_sd();

  // Each rep fills its own row of the prediction matrix and its own
  // squared-error total against fresh noisy targets; both are slot writes,
  // so the parallel schedule cannot leak into the result.
  Matrix predictions(static_cast<Eigen::Index>(reps), m);
  std::vector<double> noisy_sq_err(reps, 0.0);
  parallel_for(reps, [&](std::size_t r) {
    Dataset train =
        gen.sample(n_train, derive_seed(seed, 0x6276747261696EULL /* "bvtrain" */, r));
    Predictor predictor = fit_proc(train, derive_seed(seed, 0x6276666974ULL /* "bvfit" */, r));
    Vector pred = predictor(X_test);
    if (pred.size() != m) {
      throw std::runtime_error("bias_variance: predictor returned " + std::to_string(pred.size()) +
                               " values for " + std::to_string(m) + " test points");
    }
    if (!pred.allFinite()) throw std::runtime_error("bias_variance: non-finite prediction");
    predictions.row(static_cast<Eigen::Index>(r)) = pred;

    Rng noise_rng(derive_seed(seed, 0x62766E6F697365ULL /* "bvnoise" */, r));
    CompensatedSum sq_err;
    for (Eigen::Index j = 0; j < m; ++j) {
      double y_noisy = f_true[j] + noise_sd * noise_rng.normal();
      double e = pred[j] - y_noisy;
      sq_err.add(e * e);
    }
    noisy_sq_err[r] = sq_err.total();
  });

  // Two-pass variance: the one-pass E[p^2] - mean^2 form cancels
  // catastrophically when predictions barely vary across reps.
  const double reps_d = static_cast<double>(reps);
  CompensatedSum bias_total, var_total;
  for (Eigen::Index j = 0; j < m; ++j) {
    CompensatedSum mean_sum;
    for (std::size_t r = 0; r < reps; ++r) {
      mean_sum.add(predictions(static_cast<Eigen::Index>(r), j));
    }
    double mean_pred = mean_sum.total() / reps_d;
    CompensatedSum dev_sum;
    for (std::size_t r = 0; r < reps; ++r) {
      double d = predictions(static_cast<Eigen::Index>(r), j) - mean_pred;
      dev_sum.add(d * d);
    }
    double bias = mean_pred - f_true[j];
    bias_total.add(bias * bias);
    var_total.add(dev_sum.total() / reps_d);
  }

  BVReport report;
  report.reps = reps;
  report.n_test = static_cast<std::size_t>(m);
  report.bias_sq = bias_total.total() / static_cast<double>(m);
  report.variance = var_total.total() / static_cast<double>(m);
  report.noise_var = noise_sd * noise_sd;
  report.total_mse = compensated_mean(noisy_sq_err) / static_cast<double>(m);
  report.decomposition_gap =
      std::abs(report.total_mse - (report.bias_sq + report.variance + report.noise_var));
  return report;
}

}  // namespace gemith
