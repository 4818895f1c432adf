#pragma once

#include "gemith/dataset.hpp"
#include "gemith/learners.hpp"
#include "gemith/oob.hpp"
#include "gemith/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gemith {

/// One evaluated configuration with its cross-validated loss.
struct Trial {
  HyperConfig config;
  double loss = 0.0;
};

/// Knobs of the candidate search. `b` is how many distinct configs per
/// learner the ensemble enumeration downstream consumes.
struct SearchParams {
  std::size_t n_trials = 30;
  std::size_t n_startup = 5;   // random-sampling warmup trials
  double gamma = 0.25;         // quantile separating good from bad trials
  std::size_t n_ei_candidates = 24;
  std::size_t b = 12;

  /// Throws std::invalid_argument unless n_startup <= n_trials,
  /// b <= n_trials, gamma in (0,1), and the counts are positive.
  void validate() const;
};

/// Propose the next configuration. During warmup (fewer than n_startup
/// trials) samples each parameter from its prior; afterwards splits the
/// history at the gamma-quantile of loss into good/bad sets, models each
/// parameter with a one-dimensional density per set (Gaussian kernels for
/// numeric domains, Laplace-smoothed counts for categorical), draws
/// n_ei_candidates from the good-set densities, and returns the draw with
/// the highest good/bad density ratio. Throws on an empty space.
HyperConfig tpe_suggest(const HyperSpace& space, const std::vector<Trial>& history,
                        const SearchParams& params, Rng& rng);

/// Search output: the top configurations plus the full trial log.
struct CandidateSet {
  std::vector<HyperConfig> configs;  // distinct, lowest loss first
  std::vector<double> losses;        // aligned with configs
  bool underfilled = false;          // true if fewer than b distinct configs were explored
  std::vector<double> best_trace;    // running minimum of loss, per trial
  std::vector<Trial> trials;         // in trial order
};

/// Run n_trials sequential suggestions, scoring each config by the
/// learner's own out-of-fold MSE (computed through `cache`, so repeated
/// configs cost nothing), and keep the b best configs distinct by
/// canonical serialization. If fewer than b distinct configs were ever
/// explored, all of them are returned with `underfilled` set.
CandidateSet bayes_candidates(const Dataset& ds, const LearnerSpec& spec, const FoldPlan& plan,
                              const SearchParams& params, std::uint64_t seed, OobCache* cache);

}  // namespace gemith
