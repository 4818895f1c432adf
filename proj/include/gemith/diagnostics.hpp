#pragma once

#include "gemith/dataset.hpp"

#include <cstdint>
#include <functional>
#include <memory>

namespace gemith {

/// Monte-Carlo decomposition of expected squared error into squared bias,
/// variance across refits, and the generator's irreducible noise.
/// `decomposition_gap` is how far the independently estimated total MSE
/// sits from the sum of the three parts; it shrinks as reps and the test
/// grid grow.
struct BVReport {
  double bias_sq = 0.0;
  double variance = 0.0;
  double noise_var = 0.0;
  double total_mse = 0.0;
  double decomposition_gap = 0.0;
  std::size_t reps = 0;
  std::size_t n_test = 0;
};

/// A synthetic-data source that exposes its noiseless regression function,
/// which is what makes the bias term measurable.
class SyntheticGenerator {
 public:
  virtual ~SyntheticGenerator() = default;
  virtual Matrix features(std::size_t n, std::uint64_t seed) const = 0;
  virtual Vector truth(const Matrix& X) const = 0;
  virtual double noise_sd() const = 0;

  /// Features plus noisy response. Noise comes from a stream derived
  /// separately from the features, so the same rows reappear under any
  /// noise level.
  virtual Dataset sample(std::size_t n, std::uint64_t seed) const;
};

/// The Friedman #1 benchmark as a generator.
class Friedman1Generator final : public SyntheticGenerator {
 public:
  explicit Friedman1Generator(double noise_sd) : noise_sd_(noise_sd) {}
  Matrix features(std::size_t n, std::uint64_t seed) const override;
  Vector truth(const Matrix& X) const override;
  double noise_sd() const override { return noise_sd_; }
  Dataset sample(std::size_t n, std::uint64_t seed) const override;

 private:
  double noise_sd_;
};

/// Anything that turns a training set into a predictor: a single learner,
/// a full ensemble build, or a test stub.
using Predictor = std::function<Vector(const Matrix&)>;
using FitProcedure = std::function<Predictor(const Dataset& train, std::uint64_t seed)>;

/// Fixed-design estimate: draw `reps` fresh training sets, fit each, and
/// predict one fixed noiseless grid of n_test points. bias_sq averages the
/// squared gap between the mean prediction and the truth over the grid;
/// variance averages the across-reps prediction variance; total_mse is
/// estimated against freshly drawn noisy targets on the same grid. Reps
/// run in parallel with derived seeds; aggregation is serial and
/// compensated, so the report is identical at any thread count.
BVReport bias_variance_estimate(const FitProcedure& fit_proc, const SyntheticGenerator& gen,
                                std::size_t n_train, std::size_t n_test, std::size_t reps,
                                std::uint64_t seed);

}  // namespace gemith
