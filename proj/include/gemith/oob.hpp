#pragma once

#include "gemith/dataset.hpp"
#include "gemith/learners.hpp"

#include <cstdint>
#include <filesystem>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gemith {

/// Identity of one out-of-fold prediction vector. The canonical config
/// string is stored whole, so hash collisions cannot alias two configs.
struct OobKey {
  LearnerKind kind = LearnerKind::Ridge;
  std::string config;      // canonical_config rendering
  std::uint64_t plan_hash = 0;
  std::uint64_t seed = 0;

  bool operator==(const OobKey&) const = default;
  std::uint64_t hash() const;
};

/// Length-n out-of-fold predictions in original row order: entry r comes
/// from a model trained with r's fold held out.
struct OobVector {
  Vector predictions;
  OobKey key;
};

/// k such vectors sharing one fold plan, plus the aligned target.
struct OobMatrix {
  Matrix columns;  // n x k
  Vector y;
  std::uint64_t plan_hash = 0;
  std::vector<OobKey> keys;

  Eigen::Index n() const { return columns.rows(); }
  Eigen::Index k() const { return columns.cols(); }
};

/// Memoizes OOB vectors by full key. Thread-safe (a single mutex; lookups
/// and stores are linearizable). With a directory attached, entries are
/// mirrored to one file per key in a text format whose floats round-trip
/// exactly.
class OobCache {
 public:
  OobCache() = default;
  explicit OobCache(std::filesystem::path directory);

  std::optional<Vector> lookup(const OobKey& key);
  void store(const OobKey& key, const Vector& predictions);

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  void reset_counters() { hits_ = misses_ = 0; }

 private:
  std::optional<Vector> disk_lookup(const OobKey& key) const;
  void disk_store(const OobKey& key, const Vector& predictions) const;
  std::filesystem::path entry_path(const OobKey& key) const;

  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, std::list<std::pair<OobKey, Vector>>> entries_;
  std::optional<std::filesystem::path> directory_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

/// Seed handed to the fold-f fit of a learner (seed XOR a mix of the fold
/// index and learner kind), so scheduling order cannot change any fit.
std::uint64_t fold_fit_seed(std::uint64_t seed, std::size_t fold, LearnerKind kind);

/// For each fold, fit on the complement and predict the held-out rows.
/// Deterministic given (data, config, plan, seed); folds run in parallel.
OobVector oob_predict(const Dataset& ds, const LearnerSpec& spec, const HyperConfig& config,
                      const FoldPlan& plan, std::uint64_t seed);

using OobItem = std::pair<LearnerSpec, HyperConfig>;

/// Column j holds oob_predict of item j. Duplicate items and anything
/// already cached are served from the cache; only distinct missing keys
/// are fitted (in parallel over item x fold). Fit failures carry the
/// offending learner and config in the message.
OobMatrix oob_matrix(const Dataset& ds, const std::vector<OobItem>& items, const FoldPlan& plan,
                     std::uint64_t seed, OobCache* cache);

}  // namespace gemith
