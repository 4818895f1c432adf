#include "gemith/diagnostics.hpp"

#include "gemith/learners.hpp"
#include "gemith/parallel.hpp"
#include "gemith/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <memory>
#include <stdexcept>

using namespace gemith;

namespace {

/// Noiseless planar target 3*x1 - 2*x2 + 0.5 on uniform features: a ridge
/// fit with a vanishing penalty should be essentially unbiased and
/// essentially variance-free here.
class LinearGenerator final : public SyntheticGenerator {
 public:
  Matrix features(std::size_t n, std::uint64_t seed) const override {
    Rng rng(seed);
    Matrix X(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      X(i, 0) = rng.uniform(-1.0, 1.0);
      X(i, 1) = rng.uniform(-1.0, 1.0);
    }
    return X;
  }
  Vector truth(const Matrix& X) const override {
    return 3.0 * X.col(0).array() - 2.0 * X.col(1).array() + 0.5;
  }
  double noise_sd() const override { return 0.0; }
};

/// Constant target c with no noise; paired with an always-zero predictor
/// it pins the decomposition exactly: bias^2 = c^2, variance = 0.
class ConstantGenerator final : public SyntheticGenerator {
 public:
  explicit ConstantGenerator(double c) : c_(c) {}
  Matrix features(std::size_t n, std::uint64_t seed) const override {
    Rng rng(seed);
    Matrix X(static_cast<Eigen::Index>(n), 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, 0) = rng.uniform(0.0, 1.0);
    return X;
  }
  Vector truth(const Matrix& X) const override { return Vector::Constant(X.rows(), c_); }
  double noise_sd() const override { return 0.0; }

 private:
  double c_;
};

FitProcedure ridge_fit(double alpha) {
  return [alpha](const Dataset& train, std::uint64_t seed) -> Predictor {
    LearnerSpec spec = default_spec(LearnerKind::Ridge);
    spec.space[0].second = ParamDomain{ParamDomain::Kind::LogUniform, 1e-12, 1e6, {}};
    HyperConfig config;
    config.kind = LearnerKind::Ridge;
    config.values["alpha"] = alpha;
    std::shared_ptr<Model> model = fit(spec, config, train.features, train.target, seed);
    return [model](const Matrix& X) { return model->predict(X); };
  };
}

FitProcedure knn_fit(double k) {
  return [k](const Dataset& train, std::uint64_t seed) -> Predictor {
    HyperConfig config;
    config.kind = LearnerKind::Knn;
    config.values["n_neighbors"] = k;
    std::shared_ptr<Model> model =
        fit(default_spec(LearnerKind::Knn), config, train.features, train.target, seed);
    return [model](const Matrix& X) { return model->predict(X); };
  };
}

}  // namespace

TEST_CASE("an oracle predictor has no bias and no variance") {
  Friedman1Generator gen(1.0);
  FitProcedure oracle = [&gen](const Dataset&, std::uint64_t) -> Predictor {
    return [&gen](const Matrix& X) { return gen.truth(X); };
  };
  const BVReport report = bias_variance_estimate(oracle, gen, 50, 200, 10, 5);
  CHECK(report.bias_sq <= 1e-20);
  CHECK(report.variance <= 1e-20);
  CHECK(report.noise_var == 1.0);
  // All that remains of the error is the irreducible noise.
  CHECK(report.total_mse == doctest::Approx(1.0).epsilon(0.1));
  CHECK(report.reps == 10);
  CHECK(report.n_test == 200);
}

TEST_CASE("an always-zero predictor against a constant target is pure bias") {
  ConstantGenerator gen(2.5);
  FitProcedure zero = [](const Dataset&, std::uint64_t) -> Predictor {
    return [](const Matrix& X) { return Vector::Zero(X.rows()); };
  };
  const BVReport report = bias_variance_estimate(zero, gen, 20, 100, 5, 9);
  CHECK(report.bias_sq == doctest::Approx(6.25).epsilon(1e-12));
  CHECK(report.variance == 0.0);
  CHECK(report.noise_var == 0.0);
  CHECK(report.total_mse == doctest::Approx(6.25).epsilon(1e-12));
  CHECK(report.decomposition_gap <= 1e-10);
}

TEST_CASE("a barely penalized linear fit on noiseless linear data nails the target") {
  LinearGenerator gen;
  const BVReport report = bias_variance_estimate(ridge_fit(1e-9), gen, 60, 100, 50, 13);
  CHECK(report.bias_sq < 1e-6);
  CHECK(report.variance < 1e-6);
  CHECK(report.noise_var == 0.0);
}

TEST_CASE("the three parts account for the measured error at scale") {
  Friedman1Generator gen(1.0);
  const BVReport report = bias_variance_estimate(knn_fit(5.0), gen, 80, 500, 200, 17);
  CHECK(report.bias_sq >= 0.0);
  CHECK(report.variance >= 0.0);
  CHECK(report.total_mse > 0.0);
  CHECK(report.decomposition_gap / std::max(report.total_mse, 1e-12) <= 0.05);
}

TEST_CASE("the report is identical at any thread count") {
  LinearGenerator gen;
  set_max_threads(1);
  const BVReport serial = bias_variance_estimate(ridge_fit(1e-3), gen, 40, 80, 20, 21);
  set_max_threads(0);
  const BVReport parallel = bias_variance_estimate(ridge_fit(1e-3), gen, 40, 80, 20, 21);
  CHECK(serial.bias_sq == parallel.bias_sq);
  CHECK(serial.variance == parallel.variance);
  CHECK(serial.total_mse == parallel.total_mse);
  CHECK(serial.decomposition_gap == parallel.decomposition_gap);
}

TEST_CASE("generator sampling separates noise from features") {
  Friedman1Generator quiet(0.0), loud(2.0);
  const Dataset a = quiet.sample(30, 77);
  const Dataset b = loud.sample(30, 77);
  CHECK(a.features == b.features);
  CHECK(a.target != b.target);
  CHECK(a.target == quiet.truth(a.features));
}

TEST_CASE("estimation inputs and predictor outputs are validated") {
  ConstantGenerator gen(1.0);
  FitProcedure zero = [](const Dataset&, std::uint64_t) -> Predictor {
    return [](const Matrix& X) { return Vector::Zero(X.rows()); };
  };
  CHECK_THROWS_AS(bias_variance_estimate(zero, gen, 20, 50, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(bias_variance_estimate(zero, gen, 0, 50, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(bias_variance_estimate(zero, gen, 20, 0, 5, 1), std::invalid_argument);

  FitProcedure short_output = [](const Dataset&, std::uint64_t) -> Predictor {
    return [](const Matrix&) { return Vector::Zero(3); };
  };
  CHECK_THROWS_AS(bias_variance_estimate(short_output, gen, 20, 50, 5, 1), std::runtime_error);

  FitProcedure poisoned = [](const Dataset&, std::uint64_t) -> Predictor {
    return [](const Matrix& X) {
      return Vector::Constant(X.rows(), std::numeric_limits<double>::quiet_NaN());
    };
  };
  CHECK_THROWS_AS(bias_variance_estimate(poisoned, gen, 20, 50, 5, 1), std::runtime_error);
}
