#include "gemith/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace gemith {

void SearchParams::validate() const {
  if (n_trials == 0) throw std::invalid_argument("search: n_trials must be positive");
  if (n_ei_candidates == 0) throw std::invalid_argument("search: n_ei_candidates must be positive");
  if (b == 0) throw std::invalid_argument("search: b must be positive");
  if (n_startup > n_trials) {
    throw std::invalid_argument("search: n_startup (" + std::to_string(n_startup) +
                                ") exceeds n_trials (" + std::to_string(n_trials) + ")");
  }
  if (b > n_trials) {
    throw std::invalid_argument("search: b (" + std::to_string(b) + ") exceeds n_trials (" +
                                std::to_string(n_trials) + ")");
  }
  if (!(gamma > 0.0) || !(gamma < 1.0)) {
    throw std::invalid_argument("search: gamma must lie strictly between 0 and 1");
  }
}

namespace {

constexpr double kPi = 3.14159265358979323846;

double prior_sample(const ParamDomain& domain, Rng& rng) {
  switch (domain.kind) {
    case ParamDomain::Kind::Uniform:
      return rng.uniform(domain.lo, domain.hi);
    case ParamDomain::Kind::LogUniform:
      return rng.log_uniform(domain.lo, domain.hi);
    case ParamDomain::Kind::Integer: {
      std::uint64_t width = static_cast<std::uint64_t>(domain.hi - domain.lo) + 1;
      return domain.lo + static_cast<double>(rng.below(width));
    }
    case ParamDomain::Kind::Categorical:
      return domain.choices[rng.below(domain.choices.size())];
  }
  throw std::logic_error("prior_sample: unknown domain kind");
}

/// Numeric domains are modelled in a transformed axis: log for
/// log-uniform parameters, identity otherwise.
struct NumericAxis {
  bool log_scale = false;
  double lo = 0.0;  // transformed bounds
  double hi = 0.0;

  double forward(double v) const { return log_scale ? std::log(v) : v; }
  double backward(double t) const { return log_scale ? std::exp(t) : t; }
  double span() const { return hi - lo; }
};

NumericAxis make_axis(const ParamDomain& domain) {
  NumericAxis axis;
  axis.log_scale = domain.kind == ParamDomain::Kind::LogUniform;
  axis.lo = axis.forward(domain.lo);
  axis.hi = axis.forward(domain.hi);
  return axis;
}

/// Kernel density over the observed values of one parameter within one
/// trial set: equally weighted Gaussians centred at the observations,
/// bandwidth floored so a large set cannot collapse to spikes.
struct Kde {
  std::vector<double> centers;  // transformed
  double bandwidth = 1.0;

  static Kde fit(const std::vector<double>& values, const NumericAxis& axis) {
    Kde kde;
    kde.centers.reserve(values.size());
    for (double v : values) kde.centers.push_back(axis.forward(v));
    double span = axis.span();
    kde.bandwidth = std::max(span / static_cast<double>(values.size()), 1e-3 * span);
    // Degenerate (single-point) domains leave span 0; any tiny positive
    // bandwidth reproduces the right behaviour: every draw is the point.
    if (kde.bandwidth <= 0.0) kde.bandwidth = 1e-12;
    return kde;
  }

  double log_density(double t) const {
    double total = 0.0;
    for (double c : centers) {
      double z = (t - c) / bandwidth;
      total += std::exp(-0.5 * z * z);
    }
    total /= static_cast<double>(centers.size()) * bandwidth * std::sqrt(2.0 * kPi);
    return std::log(std::max(total, 1e-300));
  }

  double sample(Rng& rng, const NumericAxis& axis) const {
    double center = centers[rng.below(centers.size())];
    double t = center + bandwidth * rng.normal();
    return std::clamp(t, axis.lo, axis.hi);
  }
};

double snap(const ParamDomain& domain, double value) {
  if (domain.kind == ParamDomain::Kind::Integer) {
    double rounded = std::nearbyint(value);
    return std::clamp(rounded, domain.lo, domain.hi);
  }
  return std::clamp(value, domain.lo, domain.hi);
}

std::size_t choice_index(const ParamDomain& domain, double value) {
  for (std::size_t c = 0; c < domain.choices.size(); ++c) {
    if (domain.choices[c] == value) return c;
  }
  throw std::logic_error("tpe: observed categorical value not among choices");
}

/// Laplace-smoothed choice frequencies for one trial set.
struct CategoricalCounts {
  std::vector<double> probability;

  static CategoricalCounts fit(const std::vector<double>& values, const ParamDomain& domain) {
    std::vector<double> counts(domain.choices.size(), 1.0);  // +1 smoothing
    for (double v : values) counts[choice_index(domain, v)] += 1.0;
    double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (double& c : counts) c /= total;
    return CategoricalCounts{std::move(counts)};
  }

  double log_probability(std::size_t c) const { return std::log(probability[c]); }

  std::size_t sample(Rng& rng) const {
    double u = rng.uniform01();
    double cumulative = 0.0;
    for (std::size_t c = 0; c < probability.size(); ++c) {
      cumulative += probability[c];
      if (u < cumulative) return c;
    }
    return probability.size() - 1;
  }
};

HyperConfig prior_config(const HyperSpace& space, LearnerKind kind, Rng& rng) {
  HyperConfig config;
  config.kind = kind;
  for (const auto& [name, domain] : space) {
    config.values[name] = prior_sample(domain, rng);
  }
  return config;
}

}  // namespace

HyperConfig tpe_suggest(const HyperSpace& space, const std::vector<Trial>& history,
                        const SearchParams& params, Rng& rng) {
  if (space.empty()) throw std::invalid_argument("tpe_suggest: empty hyperparameter space");
  for (const Trial& trial : history) {
    if (!std::isfinite(trial.loss)) {
      throw std::invalid_argument("tpe_suggest: non-finite loss in history");
    }
  }

  LearnerKind kind = history.empty() ? LearnerKind::Ridge : history.front().config.kind;
  if (history.size() < params.n_startup) return prior_config(space, kind, rng);

  // Split at the gamma-quantile: the ceil(gamma*|history|) lowest-loss
  // trials are "good", the rest "bad". Ties break by trial order.
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return history[a].loss < history[b].loss; });
  std::size_t good_count = static_cast<std::size_t>(
      std::ceil(params.gamma * static_cast<double>(history.size())));
  good_count = std::min(good_count, history.size());
  if (good_count == 0 || good_count == history.size()) {
    return prior_config(space, kind, rng);  // one side empty: no densities to compare
  }

  // Per-parameter observed values for each side.
  struct ParamModel {
    bool categorical = false;
    NumericAxis axis;
    Kde good_kde, bad_kde;
    CategoricalCounts good_counts, bad_counts;
  };
  std::vector<ParamModel> models(space.size());
  for (std::size_t p = 0; p < space.size(); ++p) {
    const auto& [name, domain] = space[p];
    std::vector<double> good_values, bad_values;
    good_values.reserve(good_count);
    bad_values.reserve(history.size() - good_count);
    for (std::size_t r = 0; r < order.size(); ++r) {
      double v = history[order[r]].config.at(name);
      (r < good_count ? good_values : bad_values).push_back(v);
    }
    ParamModel& model = models[p];
    if (domain.kind == ParamDomain::Kind::Categorical) {
      model.categorical = true;
      model.good_counts = CategoricalCounts::fit(good_values, domain);
      model.bad_counts = CategoricalCounts::fit(bad_values, domain);
    } else {
      model.axis = make_axis(domain);
      model.good_kde = Kde::fit(good_values, model.axis);
      model.bad_kde = Kde::fit(bad_values, model.axis);
    }
  }

  // Draw candidates from the good-side densities; keep the one whose
  // good/bad log-density ratio is highest (first wins ties).
  HyperConfig best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < params.n_ei_candidates; ++c) {
    HyperConfig candidate;
    candidate.kind = kind;
    double score = 0.0;
    for (std::size_t p = 0; p < space.size(); ++p) {
      const auto& [name, domain] = space[p];
      const ParamModel& model = models[p];
      double value;
      if (model.categorical) {
        std::size_t idx = model.good_counts.sample(rng);
        value = domain.choices[idx];
        score += model.good_counts.log_probability(idx) - model.bad_counts.log_probability(idx);
      } else {
        value = snap(domain, model.axis.backward(model.good_kde.sample(rng, model.axis)));
        double t = model.axis.forward(value);
        score += model.good_kde.log_density(t) - model.bad_kde.log_density(t);
      }
      candidate.values[name] = value;
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(candidate);
    }
  }
  return best;
}

CandidateSet bayes_candidates(const Dataset& ds, const LearnerSpec& spec, const FoldPlan& plan,
                              const SearchParams& params, std::uint64_t seed, OobCache* cache) {
  params.validate();
  if (spec.space.empty()) {
    throw std::invalid_argument("bayes_candidates: learner '" + spec.name + "' has no parameters");
  }

  Rng rng(derive_seed(seed, 0x6261796573ULL /* "bayes" */, fnv1a(spec.name)));
  CandidateSet out;
  out.trials.reserve(params.n_trials);
  out.best_trace.reserve(params.n_trials);

  for (std::size_t t = 0; t < params.n_trials; ++t) {
    HyperConfig config = tpe_suggest(spec.space, out.trials, params, rng);
    config.kind = spec.kind;
    OobMatrix column = oob_matrix(ds, {{spec, config}}, plan, seed, cache);
    double loss = (column.columns.col(0) - column.y).squaredNorm() /
                  static_cast<double>(column.n());
    out.trials.push_back(Trial{std::move(config), loss});
    double best = out.best_trace.empty() ? loss : std::min(out.best_trace.back(), loss);
    out.best_trace.push_back(best);
  }

  // Rank by (loss, trial order) and keep the first b distinct configs.
  std::vector<std::size_t> order(out.trials.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.trials[a].loss < out.trials[b].loss;
  });
  std::unordered_set<std::string> seen;
  for (std::size_t idx : order) {
    if (out.configs.size() == params.b) break;
    std::string rendering = canonical_config(out.trials[idx].config);
    if (seen.insert(std::move(rendering)).second) {
      out.configs.push_back(out.trials[idx].config);
      out.losses.push_back(out.trials[idx].loss);
    }
  }
  out.underfilled = out.configs.size() < params.b;
  return out;
}

}  // namespace gemith
