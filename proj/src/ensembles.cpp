#include "gemith/ensembles.hpp"

#include "gemith/parallel.hpp"
#include "gemith/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>

namespace gemith {

namespace {

constexpr std::pair<EnsembleMethod, std::string_view> kMethodNames[] = {
    {EnsembleMethod::Bem, "bem"},
    {EnsembleMethod::Gem, "gem"},
    {EnsembleMethod::GemIth, "gem_ith"},
    {EnsembleMethod::StackedLinear, "stacked_lr"},
    {EnsembleMethod::StackedForest, "stacked_rf"},
    {EnsembleMethod::StackedKnn, "stacked_knn"},
};

}  // namespace

std::string_view ensemble_method_name(EnsembleMethod method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  throw std::logic_error("ensemble_method_name: unknown method");
}

EnsembleMethod ensemble_method_from_name(std::string_view name) {
  for (const auto& [m, method_name] : kMethodNames) {
    if (method_name == name) return m;
  }
  throw std::invalid_argument("unknown ensemble method '" + std::string(name) +
                              "' (expected bem, gem, gem_ith, stacked_lr, stacked_rf, "
                              "or stacked_knn)");
}

bool is_stacked(EnsembleMethod method) {
  return method == EnsembleMethod::StackedLinear || method == EnsembleMethod::StackedForest ||
         method == EnsembleMethod::StackedKnn;
}

SimplexWeights bem(const OobMatrix& m) {
  if (m.k() == 0) throw std::invalid_argument("bem: empty matrix");
  SimplexWeights result;
  result.w = Vector::Constant(m.k(), 1.0 / static_cast<double>(m.k()));
  result.objective = ensemble_mse(result.w, m);
  result.converged = true;
  return result;
}

namespace {

void require_distinct_specs(const std::vector<LearnerSpec>& specs) {
  if (specs.empty()) throw std::invalid_argument("ensemble: no learners given");
  std::unordered_set<std::string> names;
  for (const LearnerSpec& spec : specs) {
    if (!names.insert(spec.name).second) {
      throw std::invalid_argument("ensemble: duplicate learner name '" + spec.name + "'");
    }
  }
}

std::vector<std::unique_ptr<Model>> refit_bases(const Dataset& train,
                                                const std::vector<LearnerSpec>& specs,
                                                const std::vector<HyperConfig>& configs,
                                                std::uint64_t seed) {
  std::vector<std::unique_ptr<Model>> bases(specs.size());
  parallel_for(specs.size(), [&](std::size_t j) {
    bases[j] = fit(specs[j], configs[j], train.features, train.target,
                   derive_seed(seed, 0x7265666974ULL /* "refit" */, fnv1a(specs[j].name)));
  });
  return bases;
}

std::vector<HyperConfig> rank1_configs(const TunedPool& pool) {
  std::vector<HyperConfig> configs;
  configs.reserve(pool.candidates.size());
  for (const CandidateSet& cs : pool.candidates) configs.push_back(cs.configs.front());
  return configs;
}

}  // namespace

TunedPool tune_learners(const Dataset& train, const std::vector<LearnerSpec>& specs,
                        const FoldPlan& plan, const SearchParams& params, std::uint64_t seed,
                        OobCache* cache) {
  require_distinct_specs(specs);
  params.validate();
  TunedPool pool;
  pool.specs = specs;
  pool.candidates.reserve(specs.size());
  for (const LearnerSpec& spec : specs) {
    pool.candidates.push_back(bayes_candidates(train, spec, plan, params, seed, cache));
  }
  std::vector<OobItem> items;
  items.reserve(specs.size());
  for (std::size_t j = 0; j < specs.size(); ++j) {
    items.emplace_back(specs[j], pool.candidates[j].configs.front());
  }
  pool.rank1 = oob_matrix(train, items, plan, seed, cache);
  return pool;
}

EnsembleModel bem_ensemble(const Dataset& train, const TunedPool& pool, std::uint64_t seed) {
  EnsembleModel model;
  model.method = EnsembleMethod::Bem;
  model.specs = pool.specs;
  model.configs = rank1_configs(pool);
  model.weights = bem(pool.rank1);
  model.oob_objective = model.weights.objective;
  model.bases = refit_bases(train, model.specs, model.configs, seed);
  return model;
}

EnsembleModel gem_ensemble(const Dataset& train, const TunedPool& pool, std::uint64_t seed) {
  EnsembleModel model;
  model.method = EnsembleMethod::Gem;
  model.specs = pool.specs;
  model.configs = rank1_configs(pool);
  model.weights = solve_gem_weights(pool.rank1);
  model.oob_objective = model.weights.objective;
  model.bases = refit_bases(train, model.specs, model.configs, seed);
  return model;
}

EnsembleModel gem(const Dataset& train, const std::vector<LearnerSpec>& specs,
                  const FoldPlan& plan, const SearchParams& params, std::uint64_t seed,
                  OobCache* cache) {
  OobCache local;
  TunedPool pool = tune_learners(train, specs, plan, params, seed, cache ? cache : &local);
  return gem_ensemble(train, pool, seed);
}

namespace {

using U128 = unsigned __int128;

/// Uniform draw below `bound` (128-bit OpenBSD-style rejection).
U128 draw_below(Rng& rng, U128 bound) {
  U128 threshold = (-bound) % bound;  // 2^128 mod bound
  for (;;) {
    U128 r = (static_cast<U128>(rng.next()) << 64) | rng.next();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace

GemIthResult gem_ith_from_candidates(const Dataset& train, const std::vector<LearnerSpec>& specs,
                                     const std::vector<std::vector<HyperConfig>>& candidates,
                                     const FoldPlan& plan, std::uint64_t seed,
                                     std::size_t combo_cap, OobCache* cache, bool keep_trace,
                                     bool refit) {
  require_distinct_specs(specs);
  if (candidates.size() != specs.size()) {
    throw std::invalid_argument("gem_ith: candidate lists do not match learners");
  }
  if (combo_cap == 0) throw std::invalid_argument("gem_ith: combo_cap must be positive");
  const std::size_t k = specs.size();
  std::vector<std::size_t> counts(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (candidates[j].empty()) {
      throw std::invalid_argument("gem_ith: learner '" + specs[j].name + "' has no candidates");
    }
    counts[j] = candidates[j].size();
  }

  // Flatten the candidate lists into one out-of-fold request so every
  // vector is fitted (or cache-served) exactly once.
  std::vector<std::size_t> offsets(k);
  std::vector<OobItem> items;
  for (std::size_t j = 0; j < k; ++j) {
    offsets[j] = items.size();
    for (const HyperConfig& config : candidates[j]) items.emplace_back(specs[j], config);
  }
  OobCache local_cache;
  OobMatrix flat = oob_matrix(train, items, plan, seed, cache ? cache : &local_cache);
  const double n = static_cast<double>(flat.n());
  Matrix gram = (flat.columns.transpose() * flat.columns) / n;
  Vector moment = (flat.columns.transpose() * flat.y) / n;
  const double y_sq_mean = flat.y.squaredNorm() / n;

  // Mixed-radix strides over the cross product; combination 0 is every
  // learner's first (best-ranked) candidate.
  std::vector<U128> strides(k);
  U128 total = 1;
  for (std::size_t j = 0; j < k; ++j) {
    strides[j] = total;
    total *= counts[j];
  }

  GemIthResult result;
  U128 planned = total <= static_cast<U128>(combo_cap) ? total : static_cast<U128>(combo_cap);
  if (planned > 10'000'000) {
    throw std::invalid_argument(
        "gem_ith: enumeration would evaluate more than the 10M-combination safety limit; "
        "lower combo_cap");
  }
  std::vector<U128> combos;
  if (total <= static_cast<U128>(combo_cap)) {
    combos.reserve(static_cast<std::size_t>(total));
    for (U128 h = 0; h < total; ++h) combos.push_back(h);
  } else {
    // Seeded subsample, always containing combination 0. Draws come from
    // one fixed stream and duplicates are skipped, so a larger cap keeps
    // the smaller cap's combinations as a prefix.
    result.subsampled = true;
    Rng combo_rng(derive_seed(seed, 0x636F6D626F73ULL /* "combos" */));
    std::set<U128> seen{0};
    combos.push_back(0);
    while (combos.size() < combo_cap) {
      U128 h = draw_below(combo_rng, total);
      if (seen.insert(h).second) combos.push_back(h);
    }
  }
  result.combinations_evaluated = combos.size();

  auto digits_of = [&](U128 h) {
    std::vector<std::size_t> digits(k);
    for (std::size_t j = 0; j < k; ++j) {
      digits[j] = static_cast<std::size_t>((h / strides[j]) % counts[j]);
    }
    return digits;
  };
  auto solve_combo = [&](U128 h) {
    std::vector<std::size_t> digits = digits_of(h);
    Matrix sub_gram(k, k);
    Vector sub_moment(k);
    for (std::size_t a = 0; a < k; ++a) {
      Eigen::Index col_a = static_cast<Eigen::Index>(offsets[a] + digits[a]);
      sub_moment[static_cast<Eigen::Index>(a)] = moment[col_a];
      for (std::size_t b = 0; b < k; ++b) {
        Eigen::Index col_b = static_cast<Eigen::Index>(offsets[b] + digits[b]);
        sub_gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gram(col_a, col_b);
      }
    }
    return solve_simplex_qp(sub_gram, sub_moment, y_sq_mean);
  };

  // Solve every combination's QP in parallel into pre-assigned slots, then
  // take the minimum serially ((objective, position) order), so thread
  // scheduling cannot change the winner.
  std::vector<double> objectives(combos.size());
  parallel_for(combos.size(), [&](std::size_t i) { objectives[i] = solve_combo(combos[i]).objective; });
  std::size_t best = 0;
  for (std::size_t i = 1; i < combos.size(); ++i) {
    if (objectives[i] < objectives[best]) best = i;
  }
  if (keep_trace) result.objective_trace = objectives;

  result.best_combination = best;
  result.best_digits = digits_of(combos[best]);
  result.configs.reserve(k);
  Matrix winner_columns(flat.n(), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    result.configs.push_back(candidates[j][result.best_digits[j]]);
    winner_columns.col(static_cast<Eigen::Index>(j)) =
        flat.columns.col(static_cast<Eigen::Index>(offsets[j] + result.best_digits[j]));
  }
  result.weights = solve_combo(combos[best]);
  // Report the exact blend MSE of the winner, not the Gram-form value.
  result.weights.objective = ensemble_mse(result.weights.w, winner_columns, flat.y);
  result.best_objective = result.weights.objective;

  result.model.method = EnsembleMethod::GemIth;
  result.model.specs = specs;
  result.model.configs = result.configs;
  result.model.weights = result.weights;
  result.model.oob_objective = result.best_objective;
  if (refit) result.model.bases = refit_bases(train, specs, result.configs, seed);
  return result;
}

GemIthResult gem_ith_ensemble(const Dataset& train, const TunedPool& pool, const FoldPlan& plan,
                              std::uint64_t seed, std::size_t combo_cap, OobCache* cache,
                              bool keep_trace) {
  std::vector<std::vector<HyperConfig>> candidates;
  candidates.reserve(pool.candidates.size());
  for (const CandidateSet& cs : pool.candidates) candidates.push_back(cs.configs);
  return gem_ith_from_candidates(train, pool.specs, candidates, plan, seed, combo_cap, cache,
                                 keep_trace);
}

GemIthResult gem_ith(const Dataset& train, const std::vector<LearnerSpec>& specs,
                     const FoldPlan& plan, const SearchParams& params, std::uint64_t seed,
                     std::size_t combo_cap, OobCache* cache) {
  // Tuning and enumeration must share one cache so the enumeration phase
  // reuses every vector the search already computed.
  OobCache local;
  OobCache* shared = cache ? cache : &local;
  TunedPool pool = tune_learners(train, specs, plan, params, seed, shared);
  return gem_ith_ensemble(train, pool, plan, seed, combo_cap, shared);
}

namespace {

/// No-intercept linear blend fitted by least squares (tiny ridge for
/// conditioning). Used as the linear stacking meta-model.
class LinearBlendModel final : public Model {
 public:
  explicit LinearBlendModel(Vector coef) : coef_(std::move(coef)) {}
  Vector predict(const Matrix& X) const override { return X * coef_; }
  Eigen::Index input_dim() const override { return coef_.size(); }

 private:
  Vector coef_;
};

LearnerSpec meta_forest_spec() {
  LearnerSpec spec;
  spec.name = "meta_forest";
  spec.kind = LearnerKind::RandomForest;
  spec.space = {{"n_estimators", {ParamDomain::Kind::Integer, 1, 100000, {}}},
                {"max_depth", {ParamDomain::Kind::Integer, 1, 255, {}}}};
  return spec;
}

LearnerSpec meta_knn_spec() {
  LearnerSpec spec;
  spec.name = "meta_knn";
  spec.kind = LearnerKind::Knn;
  spec.space = {{"n_neighbors", {ParamDomain::Kind::Integer, 1, 1e9, {}}}};
  return spec;
}

}  // namespace

HyperConfig default_meta_config(EnsembleMethod method) {
  HyperConfig config;
  switch (method) {
    case EnsembleMethod::StackedLinear:
      config.kind = LearnerKind::Ridge;
      return config;
    case EnsembleMethod::StackedForest:
      config.kind = LearnerKind::RandomForest;
      config.values = {{"n_estimators", 200.0}, {"max_depth", 6.0}};
      return config;
    case EnsembleMethod::StackedKnn:
      config.kind = LearnerKind::Knn;
      config.values = {{"n_neighbors", 5.0}};
      return config;
    default:
      throw std::invalid_argument("default_meta_config: not a stacked method");
  }
}

StackedFit fit_stacked_meta(EnsembleMethod method, const OobMatrix& m,
                            const HyperConfig* meta_config, std::uint64_t seed) {
  if (!is_stacked(method)) {
    throw std::invalid_argument("fit_stacked_meta: not a stacked method");
  }
  if (m.n() == 0 || m.k() == 0) throw std::invalid_argument("fit_stacked_meta: empty matrix");
  StackedFit fitted;
  if (method == EnsembleMethod::StackedLinear) {
    const double n = static_cast<double>(m.n());
    Matrix gram = (m.columns.transpose() * m.columns) / n;
    gram.diagonal().array() += 1e-8;
    Vector moment = (m.columns.transpose() * m.y) / n;
    Vector coef = gram.ldlt().solve(moment);
    if (!coef.allFinite()) {
      throw std::runtime_error("fit_stacked_meta: linear meta solve failed");
    }
    fitted.meta = std::make_unique<LinearBlendModel>(std::move(coef));
  } else {
    LearnerSpec spec =
        method == EnsembleMethod::StackedForest ? meta_forest_spec() : meta_knn_spec();
    HyperConfig config = meta_config ? *meta_config : default_meta_config(method);
    config.kind = spec.kind;
    fitted.meta = fit(spec, config, m.columns, m.y,
                      derive_seed(seed, 0x6D657461ULL /* "meta" */,
                                  static_cast<std::uint64_t>(method)));
  }
  Vector train_pred = fitted.meta->predict(m.columns);
  fitted.train_mse = (train_pred - m.y).squaredNorm() / static_cast<double>(m.n());
  return fitted;
}

EnsembleModel stacked(EnsembleMethod method, const Dataset& train, const TunedPool& pool,
                      std::uint64_t seed, const HyperConfig* meta_config) {
  StackedFit fitted = fit_stacked_meta(method, pool.rank1, meta_config, seed);
  EnsembleModel model;
  model.method = method;
  model.specs = pool.specs;
  model.configs = rank1_configs(pool);
  model.meta = std::move(fitted.meta);
  model.oob_objective = fitted.train_mse;
  model.bases = refit_bases(train, model.specs, model.configs, seed);
  return model;
}

double pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw std::invalid_argument("pearson: length mismatch or empty");
  }
  const double n = static_cast<double>(a.size());
  Vector ac = a.array() - a.mean();
  Vector bc = b.array() - b.mean();
  double var_a = ac.squaredNorm() / n;
  double var_b = bc.squaredNorm() / n;
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  return (ac.dot(bc) / n) / std::sqrt(var_a * var_b);
}

SelectionReport select_base_learners(const Dataset& train, const std::vector<LearnerSpec>& pool,
                                     const FoldPlan& plan, const SearchParams& params,
                                     std::uint64_t seed, OobCache* cache) {
  if (pool.size() < 4) {
    throw std::invalid_argument("select_base_learners: pool has " + std::to_string(pool.size()) +
                                " learners, need at least 4");
  }
  require_distinct_specs(pool);
  OobCache local_cache;
  OobCache* memo = cache ? cache : &local_cache;

  // Stage 1: tune each pool learner and record its best out-of-fold MSE.
  SelectionReport report;
  std::vector<OobItem> items;
  items.reserve(pool.size());
  for (const LearnerSpec& spec : pool) {
    CandidateSet cs = bayes_candidates(train, spec, plan, params, seed, memo);
    report.pool_mse.push_back(cs.losses.front());
    items.emplace_back(spec, cs.configs.front());
  }
  OobMatrix rank1 = oob_matrix(train, items, plan, seed, memo);

  // Stage 2: drop above-average learners; if that leaves fewer than four,
  // re-admit the best of the dropped.
  double mean_mse = std::accumulate(report.pool_mse.begin(), report.pool_mse.end(), 0.0) /
                    static_cast<double>(pool.size());
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    (report.pool_mse[i] <= mean_mse ? survivors : report.pruned).push_back(i);
  }
  if (survivors.size() < 4) {
    std::vector<std::size_t> dropped = report.pruned;
    std::sort(dropped.begin(), dropped.end(), [&](std::size_t a, std::size_t b) {
      return report.pool_mse[a] != report.pool_mse[b] ? report.pool_mse[a] < report.pool_mse[b]
                                                      : a < b;
    });
    for (std::size_t i : dropped) {
      if (survivors.size() == 4) break;
      survivors.push_back(i);
      report.restored.push_back(i);
    }
    std::sort(survivors.begin(), survivors.end());
  }
  report.survivors = survivors;

  // Stage 3: pairwise correlation of the survivors' out-of-fold vectors.
  const std::size_t s = survivors.size();
  report.correlations.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      report.correlations(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          a == b ? 1.0
                 : pearson(rank1.columns.col(static_cast<Eigen::Index>(survivors[a])),
                           rank1.columns.col(static_cast<Eigen::Index>(survivors[b])));
    }
  }

  // Stages 4-5: seed with the least-correlated pair, then grow by minimum
  // worst-case correlation to the chosen set. Ties prefer lower indices.
  std::vector<std::size_t> chosen_positions;
  if (s == 4) {
    chosen_positions = {0, 1, 2, 3};
  } else {
    double best_pair = std::numeric_limits<double>::infinity();
    std::size_t pa = 0, pb = 1;
    for (std::size_t a = 0; a < s; ++a) {
      for (std::size_t b = a + 1; b < s; ++b) {
        double c = report.correlations(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (c < best_pair) {
          best_pair = c;
          pa = a;
          pb = b;
        }
      }
    }
    chosen_positions = {pa, pb};
    while (chosen_positions.size() < 4) {
      double best_score = std::numeric_limits<double>::infinity();
      std::size_t best_c = s;
      for (std::size_t c = 0; c < s; ++c) {
        if (std::find(chosen_positions.begin(), chosen_positions.end(), c) !=
            chosen_positions.end()) {
          continue;
        }
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t in : chosen_positions) {
          worst = std::max(worst, report.correlations(static_cast<Eigen::Index>(c),
                                                      static_cast<Eigen::Index>(in)));
        }
        if (worst < best_score) {
          best_score = worst;
          best_c = c;
        }
      }
      chosen_positions.push_back(best_c);
    }
    std::sort(chosen_positions.begin(), chosen_positions.end());
  }

  for (std::size_t pos : chosen_positions) report.chosen.push_back(survivors[pos]);
  for (std::size_t i : report.chosen) report.specs.push_back(pool[i]);
  return report;
}

Vector predict_test(const EnsembleModel& model, const Matrix& X_test) {
  if (model.bases.empty()) {
    throw std::logic_error("predict_test: ensemble has no refit base models");
  }
  Matrix base_predictions(X_test.rows(), static_cast<Eigen::Index>(model.bases.size()));
  for (std::size_t j = 0; j < model.bases.size(); ++j) {
    base_predictions.col(static_cast<Eigen::Index>(j)) = model.bases[j]->predict_checked(X_test);
  }
  if (is_stacked(model.method)) {
    return model.meta->predict_checked(base_predictions);
  }
  if (model.weights.w.size() != base_predictions.cols()) {
    throw std::logic_error("predict_test: weight length does not match base count");
  }
  return base_predictions * model.weights.w;
}

double evaluate(const EnsembleModel& model, const Dataset& test) {
  test.validate();
  Vector predictions = predict_test(model, test.features);
  return (predictions - test.target).squaredNorm() / static_cast<double>(test.n());
}

}  // namespace gemith
