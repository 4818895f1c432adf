#include "gemith/learners.hpp"

#include "learners_impl.hpp"

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

namespace gemith {

namespace {
std::atomic<std::uint64_t> g_fit_calls{0};
}

std::uint64_t fit_call_count() { return g_fit_calls.load(); }
void reset_fit_call_count() { g_fit_calls.store(0); }

std::string_view learner_kind_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Ridge: return "ridge";
    case LearnerKind::ElasticNet: return "elastic_net";
    case LearnerKind::Knn: return "knn";
    case LearnerKind::Tree: return "tree";
    case LearnerKind::RandomForest: return "random_forest";
    case LearnerKind::GradientBoosting: return "gradient_boosting";
  }
  throw std::logic_error("unknown learner kind");
}

LearnerKind learner_kind_from_name(std::string_view name) {
  for (LearnerKind kind :
       {LearnerKind::Ridge, LearnerKind::ElasticNet, LearnerKind::Knn, LearnerKind::Tree,
        LearnerKind::RandomForest, LearnerKind::GradientBoosting}) {
    if (learner_kind_name(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown learner \"" + std::string(name) + "\"");
}

bool ParamDomain::contains(double value) const {
  if (!std::isfinite(value)) return false;
  switch (kind) {
    case Kind::Uniform:
    case Kind::LogUniform:
      return value >= lo && value <= hi;
    case Kind::Integer:
      return value >= lo && value <= hi && value == std::floor(value);
    case Kind::Categorical:
      for (double c : choices)
        if (c == value) return true;
      return false;
  }
  return false;
}

void ParamDomain::validate(const std::string& name) const {
  if (kind == Kind::Categorical) {
    if (choices.empty())
      throw std::invalid_argument("parameter \"" + name + "\": empty categorical domain");
    return;
  }
  if (!(lo < hi))
    throw std::invalid_argument("parameter \"" + name + "\": need lo < hi");
  if (kind == Kind::LogUniform && !(lo > 0))
    throw std::invalid_argument("parameter \"" + name + "\": log-uniform needs lo > 0");
}

double HyperConfig::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end())
    throw std::invalid_argument("config missing parameter \"" + name + "\"");
  return it->second;
}

int HyperConfig::at_int(const std::string& name) const {
  return static_cast<int>(std::llround(at(name)));
}

std::string canonical_config(const HyperConfig& config) {
  std::string out(learner_kind_name(config.kind));
  for (const auto& [name, value] : config.values) {  // std::map iterates sorted
    out += ';';
    out += name;
    out += '=';
    out += format_float17(value);
  }
  return out;
}

void validate_config(const LearnerSpec& spec, const HyperConfig& config) {
  if (config.kind != spec.kind)
    throw std::invalid_argument("config kind does not match learner \"" + spec.name + "\"");
  std::set<std::string> declared;
  for (const auto& [name, domain] : spec.space) {
    declared.insert(name);
    auto it = config.values.find(name);
    if (it == config.values.end())
      throw std::invalid_argument("learner \"" + spec.name + "\": config missing parameter \"" +
                                  name + "\"");
    if (!domain.contains(it->second))
      throw std::invalid_argument("learner \"" + spec.name + "\": value " +
                                  format_float17(it->second) + " outside domain of \"" + name +
                                  "\"");
  }
  for (const auto& [name, value] : config.values)
    if (!declared.count(name))
      throw std::invalid_argument("learner \"" + spec.name + "\": unknown parameter \"" + name +
                                  "\"");
}

Vector Model::predict_checked(const Matrix& X) const {
  if (X.cols() != input_dim())
    throw std::invalid_argument("predict: X has " + std::to_string(X.cols()) +
                                " columns, model trained with " + std::to_string(input_dim()));
  Vector out = predict(X);
  if (!out.allFinite()) throw std::runtime_error("predict: non-finite output");
  return out;
}

std::unique_ptr<Model> fit(const LearnerSpec& spec, const HyperConfig& config, const Matrix& X,
                           const Vector& y, std::uint64_t seed) {
  validate_config(spec, config);
  if (X.rows() < 1) throw std::invalid_argument("fit: empty training set");
  if (y.size() != X.rows()) throw std::invalid_argument("fit: X/y row mismatch");
  g_fit_calls.fetch_add(1);
  switch (spec.kind) {
    case LearnerKind::Ridge: return detail::fit_ridge(config, X, y);
    case LearnerKind::ElasticNet: return detail::fit_elastic_net(config, X, y);
    case LearnerKind::Knn: return detail::fit_knn(config, X, y);
    case LearnerKind::Tree: return detail::fit_tree(config, X, y);
    case LearnerKind::RandomForest: return detail::fit_random_forest(config, X, y, seed);
    case LearnerKind::GradientBoosting: return detail::fit_gradient_boosting(config, X, y);
  }
  throw std::logic_error("unknown learner kind");
}

LearnerSpec default_spec(LearnerKind kind) {
  using K = ParamDomain::Kind;
  LearnerSpec spec;
  spec.name = std::string(learner_kind_name(kind));
  spec.kind = kind;
  switch (kind) {
    case LearnerKind::Ridge:
      spec.space = {{"alpha", {K::LogUniform, 1e-5, 1.0, {}}}};
      break;
    case LearnerKind::ElasticNet:
      spec.space = {{"alpha", {K::LogUniform, 1e-5, 1.0, {}}},
                    {"l1_ratio", {K::LogUniform, 1e-5, 1.0, {}}}};
      break;
    case LearnerKind::Knn:
      spec.space = {{"n_neighbors", {K::Integer, 2, 10, {}}}};
      break;
    case LearnerKind::Tree:
      spec.space = {{"max_depth", {K::Integer, 4, 22, {}}}};
      break;
    case LearnerKind::RandomForest:
      spec.space = {{"n_estimators", {K::Categorical, 0, 0, {100, 200, 500}}},
                    {"max_depth", {K::Integer, 4, 9, {}}}};
      break;
    case LearnerKind::GradientBoosting:
      spec.space = {{"n_estimators", {K::Categorical, 0, 0, {100, 200, 500}}},
                    {"learning_rate", {K::Uniform, 0.5, 2.0, {}}}};
      break;
  }
  for (const auto& [name, domain] : spec.space) domain.validate(name);
  return spec;
}

std::vector<LearnerSpec> default_spaces() {
  std::vector<LearnerSpec> specs;
  for (LearnerKind kind :
       {LearnerKind::Ridge, LearnerKind::ElasticNet, LearnerKind::Knn, LearnerKind::Tree,
        LearnerKind::RandomForest, LearnerKind::GradientBoosting})
    specs.push_back(default_spec(kind));
  return specs;
}

}  // namespace gemith
