#pragma once

#include "gemith/dataset.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gemith {

enum class LearnerKind {
  Ridge,
  ElasticNet,
  Knn,
  Tree,
  RandomForest,
  GradientBoosting,
};

std::string_view learner_kind_name(LearnerKind kind);
LearnerKind learner_kind_from_name(std::string_view name);

/// One tunable hyperparameter. All in-scope parameters are numeric, so
/// categorical domains hold a finite set of numeric choices.
struct ParamDomain {
  enum class Kind { Uniform, LogUniform, Integer, Categorical };
  Kind kind = Kind::Uniform;
  double lo = 0.0;
  double hi = 0.0;                // Integer bounds are inclusive
  std::vector<double> choices;    // Categorical only

  bool contains(double value) const;
  void validate(const std::string& name) const;
};

/// Ordered (name, domain) pairs; names unique.
using HyperSpace = std::vector<std::pair<std::string, ParamDomain>>;

/// A pool entry: a learner kind plus its searchable space. `name`
/// distinguishes entries that share a kind (unique within a pool).
struct LearnerSpec {
  std::string name;
  LearnerKind kind = LearnerKind::Ridge;
  HyperSpace space;
};

/// A point in a learner's hyperparameter space.
struct HyperConfig {
  LearnerKind kind = LearnerKind::Ridge;
  std::map<std::string, double> values;

  double at(const std::string& name) const;
  int at_int(const std::string& name) const;
};

/// Render with sorted parameter names and 17-significant-digit decimals;
/// equal strings iff the configs are interchangeable. Cache keys and
/// candidate-distinctness both key off this.
std::string canonical_config(const HyperConfig& config);

/// Throws std::invalid_argument naming the parameter when the config is
/// missing a declared parameter, has an extra one, or a value leaves its
/// domain.
void validate_config(const LearnerSpec& spec, const HyperConfig& config);

/// A fitted base learner. Immutable after fit; safe to share across
/// threads.
class Model {
 public:
  virtual ~Model() = default;
  virtual Vector predict(const Matrix& X) const = 0;
  virtual Eigen::Index input_dim() const = 0;

  Vector predict_checked(const Matrix& X) const;
};

/// Train a base learner. Deterministic given (data, config, seed); the
/// seed only matters for randomized learners (the forest bootstrap).
std::unique_ptr<Model> fit(const LearnerSpec& spec, const HyperConfig& config, const Matrix& X,
                           const Vector& y, std::uint64_t seed);

/// The six searchable learners with their stock spaces: ridge alpha
/// log-uniform [1e-5, 1]; elastic net alpha and l1_ratio log-uniform
/// [1e-5, 1]; knn n_neighbors integer [2, 10]; tree max_depth integer
/// [4, 22]; random forest n_estimators {100, 200, 500} and max_depth
/// integer [4, 9]; gradient boosting n_estimators {100, 200, 500} and
/// learning_rate uniform [0.5, 2].
std::vector<LearnerSpec> default_spaces();
LearnerSpec default_spec(LearnerKind kind);

/// Process-wide count of fit() invocations, for instrumentation.
std::uint64_t fit_call_count();
void reset_fit_call_count();

}  // namespace gemith
