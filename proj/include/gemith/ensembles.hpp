#pragma once

#include "gemith/dataset.hpp"
#include "gemith/learners.hpp"
#include "gemith/oob.hpp"
#include "gemith/search.hpp"
#include "gemith/simplex_qp.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

namespace gemith {

enum class EnsembleMethod {
  Bem,            // uniform blend of tuned base learners
  Gem,            // simplex-optimal blend, learners tuned independently first
  GemIth,         // simplex-optimal blend with the tuning folded into the enumeration
  StackedLinear,  // no-intercept least-squares meta-model
  StackedForest,  // random-forest meta-model
  StackedKnn,     // k-nearest-neighbour meta-model
};

std::string_view ensemble_method_name(EnsembleMethod method);
EnsembleMethod ensemble_method_from_name(std::string_view name);
bool is_stacked(EnsembleMethod method);

/// A fitted ensemble, ready for test-time prediction. Simplex methods
/// carry blend weights; stacked methods carry a fitted meta-model. The
/// base models are refit on the full training split with the chosen
/// configs (the out-of-fold models only serve weight/meta fitting).
struct EnsembleModel {
  EnsembleMethod method = EnsembleMethod::Bem;
  std::vector<LearnerSpec> specs;
  std::vector<HyperConfig> configs;
  SimplexWeights weights;                      // simplex methods only
  std::unique_ptr<Model> meta;                 // stacked methods only
  std::vector<std::unique_ptr<Model>> bases;   // aligned with specs
  double oob_objective = 0.0;                  // blend/meta MSE on the out-of-fold matrix
};

/// Everything the methods share for one training split: per-learner
/// candidate searches and the out-of-fold columns of each learner's
/// top-ranked config.
struct TunedPool {
  std::vector<LearnerSpec> specs;
  std::vector<CandidateSet> candidates;  // aligned with specs
  OobMatrix rank1;                       // column j = specs[j] at its best config
};

/// Uniform weights 1/k with their blend MSE.
SimplexWeights bem(const OobMatrix& m);

/// Run the candidate search for every learner (sequentially; the fold
/// fits inside are parallel) and assemble the rank-1 out-of-fold matrix.
/// Throws if specs are empty or share a name.
TunedPool tune_learners(const Dataset& train, const std::vector<LearnerSpec>& specs,
                        const FoldPlan& plan, const SearchParams& params, std::uint64_t seed,
                        OobCache* cache);

EnsembleModel bem_ensemble(const Dataset& train, const TunedPool& pool, std::uint64_t seed);

/// Optimal simplex blend of the independently tuned learners.
EnsembleModel gem_ensemble(const Dataset& train, const TunedPool& pool, std::uint64_t seed);

/// Convenience wrapper: tune, then blend.
EnsembleModel gem(const Dataset& train, const std::vector<LearnerSpec>& specs,
                  const FoldPlan& plan, const SearchParams& params, std::uint64_t seed,
                  OobCache* cache = nullptr);

inline constexpr std::size_t kDefaultComboCap = 25000;

/// Outcome of the per-combination enumeration.
struct GemIthResult {
  std::size_t best_combination = 0;     // position in the evaluated list
  std::vector<std::size_t> best_digits; // candidate rank chosen per learner
  double best_objective = 0.0;          // exact blend MSE of the winner
  std::vector<double> objective_trace;  // per evaluated combination (when requested)
  SimplexWeights weights;
  std::vector<HyperConfig> configs;     // aligned with specs
  bool subsampled = false;              // enumeration was capped
  std::size_t combinations_evaluated = 0;
  EnsembleModel model;
};

/// Enumerate one config choice per learner over the cross product of the
/// given candidate lists (combination 0 = every learner's first
/// candidate), solve the weight QP for each combination from one shared
/// Gram matrix, and keep the minimum. When the cross product exceeds
/// combo_cap, a seeded uniform subsample is evaluated instead; the sample
/// is a prefix of one fixed stream, so raising the cap only ever adds
/// combinations. The b*k out-of-fold vectors are computed once through
/// the cache. With refit=false the returned model has no base models
/// (used when only the objective is needed).
GemIthResult gem_ith_from_candidates(const Dataset& train, const std::vector<LearnerSpec>& specs,
                                     const std::vector<std::vector<HyperConfig>>& candidates,
                                     const FoldPlan& plan, std::uint64_t seed,
                                     std::size_t combo_cap, OobCache* cache,
                                     bool keep_trace = false, bool refit = true);

/// Enumeration over a tuned pool's candidate lists. Because combination 0
/// is exactly the rank-1 (GEM) choice, the returned objective can never
/// exceed GEM's.
GemIthResult gem_ith_ensemble(const Dataset& train, const TunedPool& pool,
                              const FoldPlan& plan, std::uint64_t seed,
                              std::size_t combo_cap = kDefaultComboCap, OobCache* cache = nullptr,
                              bool keep_trace = false);

/// Convenience wrapper: tune, then enumerate.
GemIthResult gem_ith(const Dataset& train, const std::vector<LearnerSpec>& specs,
                     const FoldPlan& plan, const SearchParams& params, std::uint64_t seed,
                     std::size_t combo_cap = kDefaultComboCap, OobCache* cache = nullptr);

/// Meta-model configs used by the stacked methods: forest 200 trees of
/// depth 6, knn with 5 neighbours, linear none.
HyperConfig default_meta_config(EnsembleMethod method);

/// Fit just the second-level model on an out-of-fold matrix. Pass a
/// config to override the default meta settings (forest/knn only).
struct StackedFit {
  std::unique_ptr<Model> meta;
  double train_mse = 0.0;
};
StackedFit fit_stacked_meta(EnsembleMethod method, const OobMatrix& m,
                            const HyperConfig* meta_config, std::uint64_t seed);

/// Full stacked ensemble over a tuned pool: meta on the rank-1 columns,
/// bases refit on the training split.
EnsembleModel stacked(EnsembleMethod method, const Dataset& train, const TunedPool& pool,
                      std::uint64_t seed, const HyperConfig* meta_config = nullptr);

/// Pearson correlation; 0 when either side has zero variance (constant
/// predictions carry no co-movement information).
double pearson(const Vector& a, const Vector& b);

/// Trace of the four-learner selection heuristic, for reporting.
struct SelectionReport {
  std::vector<std::size_t> chosen;     // pool indices, ascending
  std::vector<LearnerSpec> specs;      // the chosen specs, same order
  std::vector<double> pool_mse;        // rank-1 out-of-fold MSE per pool entry
  std::vector<std::size_t> pruned;     // dropped for above-average MSE
  std::vector<std::size_t> restored;   // re-admitted to keep four available
  std::vector<std::size_t> survivors;  // candidates entering the correlation stage
  Matrix correlations;                 // survivor x survivor
};

/// Pick four of the pool: tune each learner, drop those with
/// above-average out-of-fold MSE (restoring the best dropped ones if
/// fewer than four remain), then greedily assemble the least-correlated
/// set — the lowest-correlation pair first, then whichever learner has
/// the smallest maximum correlation to the current set. Ties break toward
/// lower pool indices. Throws unless the pool has at least four entries.
SelectionReport select_base_learners(const Dataset& train, const std::vector<LearnerSpec>& pool,
                                     const FoldPlan& plan, const SearchParams& params,
                                     std::uint64_t seed, OobCache* cache = nullptr);

Vector predict_test(const EnsembleModel& model, const Matrix& X_test);
double evaluate(const EnsembleModel& model, const Dataset& test);

}  // namespace gemith
