#include "gemith/oob.hpp"

#include "gemith/parallel.hpp"
#include "gemith/rng.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace gemith {

std::uint64_t OobKey::hash() const {
  std::uint64_t h = fnv1a(config);
  h = derive_seed(h, static_cast<std::uint64_t>(kind), plan_hash, seed);
  return h;
}

OobCache::OobCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(*directory_);
}

std::optional<Vector> OobCache::lookup(const OobKey& key) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key.hash());
  if (it != entries_.end()) {
    for (const auto& [stored_key, predictions] : it->second) {
      if (stored_key == key) {
        ++hits_;
        return predictions;
      }
    }
  }
  if (directory_) {
    if (auto loaded = disk_lookup(key)) {
      entries_[key.hash()].emplace_back(key, *loaded);
      ++hits_;
      return loaded;
    }
  }
  ++misses_;
  return std::nullopt;
}

void OobCache::store(const OobKey& key, const Vector& predictions) {
  std::lock_guard lock(mutex_);
  auto& bucket = entries_[key.hash()];
  for (const auto& [stored_key, _] : bucket) {
    if (stored_key == key) return;  // already present; first write wins
  }
  bucket.emplace_back(key, predictions);
  if (directory_) disk_store(key, predictions);
}

std::filesystem::path OobCache::entry_path(const OobKey& key) const {
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.oob",
                static_cast<unsigned long long>(key.hash()));
  return *directory_ / name;
}

std::optional<Vector> OobCache::disk_lookup(const OobKey& key) const {
  std::ifstream in(entry_path(key));
  if (!in) return std::nullopt;
  // Header must match the full key; a hash collision on the file name
  // just reads as a mismatch and is treated as a miss.
  std::string kind_line, config_line, plan_line, seed_line, count_line;
  if (!std::getline(in, kind_line) || !std::getline(in, config_line) ||
      !std::getline(in, plan_line) || !std::getline(in, seed_line) ||
      !std::getline(in, count_line)) {
    return std::nullopt;
  }
  if (kind_line != std::string(learner_kind_name(key.kind)) || config_line != key.config ||
      plan_line != std::to_string(key.plan_hash) || seed_line != std::to_string(key.seed)) {
    return std::nullopt;
  }
  std::size_t count = 0;
  auto [p, ec] = std::from_chars(count_line.data(), count_line.data() + count_line.size(), count);
  if (ec != std::errc() || p != count_line.data() + count_line.size()) return std::nullopt;
  Vector predictions(static_cast<Eigen::Index>(count));
  std::string value_line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, value_line)) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(value_line.c_str(), &end);
    if (end != value_line.c_str() + value_line.size()) return std::nullopt;
    predictions[static_cast<Eigen::Index>(i)] = v;
  }
  return predictions;
}

void OobCache::disk_store(const OobKey& key, const Vector& predictions) const {
  // Write to a temp name, then rename, so a crashed writer never leaves a
  // half-formed entry for a later lookup.
  std::filesystem::path final_path = entry_path(key);
  std::filesystem::path tmp_path = final_path;
  tmp_path += ".tmp";
  {
    std::ofstream out(tmp_path, std::ios::trunc);
    if (!out) return;  // disk mirroring is best-effort
    out << learner_kind_name(key.kind) << '\n'
        << key.config << '\n'
        << key.plan_hash << '\n'
        << key.seed << '\n'
        << predictions.size() << '\n';
    for (Eigen::Index i = 0; i < predictions.size(); ++i) {
      out << format_float17(predictions[i]) << '\n';
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) std::filesystem::remove(tmp_path, ec);
}

std::uint64_t fold_fit_seed(std::uint64_t seed, std::size_t fold, LearnerKind kind) {
  return seed ^ derive_seed(0x6F6F62ULL /* "oob" */, fold, static_cast<std::uint64_t>(kind));
}

namespace {

/// Row indices per side for one held-out fold.
struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

FoldSplit split_for_fold(const FoldPlan& plan, std::uint32_t fold) {
  FoldSplit split;
  split.train.reserve(plan.n - plan.fold_size(fold));
  split.test.reserve(plan.fold_size(fold));
  for (std::size_t r = 0; r < plan.n; ++r) {
    (plan.assignment[r] == fold ? split.test : split.train).push_back(r);
  }
  return split;
}

Vector compute_oob(const Dataset& ds, const LearnerSpec& spec, const HyperConfig& config,
                   const FoldPlan& plan, std::uint64_t seed) {
  Vector predictions = Vector::Zero(static_cast<Eigen::Index>(plan.n));
  parallel_for(plan.fold_count, [&](std::size_t f) {
    FoldSplit split = split_for_fold(plan, static_cast<std::uint32_t>(f));
    Dataset train = take_rows(ds, split.train);
    std::unique_ptr<Model> model;
    try {
      model = fit(spec, config, train.features, train.target,
                  fold_fit_seed(seed, f, spec.kind));
    } catch (const std::exception& e) {
      throw std::runtime_error("oob fit failed for learner '" + spec.name + "' config " +
                               canonical_config(config) + " fold " + std::to_string(f) + ": " +
                               e.what());
    }
    Matrix held_out(static_cast<Eigen::Index>(split.test.size()), ds.p());
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      held_out.row(static_cast<Eigen::Index>(i)) =
          ds.features.row(static_cast<Eigen::Index>(split.test[i]));
    }
    Vector fold_predictions = model->predict_checked(held_out);
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      predictions[static_cast<Eigen::Index>(split.test[i])] =
          fold_predictions[static_cast<Eigen::Index>(i)];
    }
  });
  return predictions;
}

}  // namespace

OobVector oob_predict(const Dataset& ds, const LearnerSpec& spec, const HyperConfig& config,
                      const FoldPlan& plan, std::uint64_t seed) {
  ds.validate();
  plan.validate();
  if (plan.n != static_cast<std::size_t>(ds.n())) {
    throw std::invalid_argument("oob_predict: fold plan covers " + std::to_string(plan.n) +
                                " rows but dataset has " + std::to_string(ds.n()));
  }
  validate_config(spec, config);
  OobVector result;
  result.key = OobKey{spec.kind, canonical_config(config), plan.content_hash(), seed};
  result.predictions = compute_oob(ds, spec, config, plan, seed);
  return result;
}

OobMatrix oob_matrix(const Dataset& ds, const std::vector<OobItem>& items, const FoldPlan& plan,
                     std::uint64_t seed, OobCache* cache) {
  ds.validate();
  plan.validate();
  if (plan.n != static_cast<std::size_t>(ds.n())) {
    throw std::invalid_argument("oob_matrix: fold plan covers " + std::to_string(plan.n) +
                                " rows but dataset has " + std::to_string(ds.n()));
  }
  if (items.empty()) throw std::invalid_argument("oob_matrix: no items");

  const std::uint64_t plan_hash = plan.content_hash();
  std::vector<OobKey> keys(items.size());
  for (std::size_t j = 0; j < items.size(); ++j) {
    validate_config(items[j].first, items[j].second);
    keys[j] = OobKey{items[j].first.kind, canonical_config(items[j].second), plan_hash, seed};
  }

  // Serve every column the cache already has (including duplicates of a
  // column seen earlier in this call), then fit only the distinct misses.
  OobMatrix out;
  out.columns.resize(ds.n(), static_cast<Eigen::Index>(items.size()));
  out.y = ds.target;
  out.plan_hash = plan_hash;
  out.keys = keys;

  std::vector<std::size_t> pending;             // first item index per distinct missing key
  std::vector<std::ptrdiff_t> column_source(items.size(), -1);  // item -> pending slot
  OobCache local;                               // stands in when the caller passes none
  OobCache& memo = cache ? *cache : local;
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (auto found = memo.lookup(keys[j])) {
      out.columns.col(static_cast<Eigen::Index>(j)) = *found;
      continue;
    }
    std::ptrdiff_t slot = -1;
    for (std::size_t s = 0; s < pending.size(); ++s) {
      if (keys[pending[s]] == keys[j]) {
        slot = static_cast<std::ptrdiff_t>(s);
        break;
      }
    }
    if (slot < 0) {
      slot = static_cast<std::ptrdiff_t>(pending.size());
      pending.push_back(j);
    }
    column_source[j] = slot;
  }

  // One task per (distinct item, fold); each writes a disjoint row slice of
  // its column, so the schedule cannot affect the result.
  std::vector<Vector> computed(pending.size(), Vector::Zero(ds.n()));
  parallel_for(pending.size() * plan.fold_count, [&](std::size_t task) {
    std::size_t s = task / plan.fold_count;
    std::uint32_t f = static_cast<std::uint32_t>(task % plan.fold_count);
    const auto& [spec, config] = items[pending[s]];
    FoldSplit split = split_for_fold(plan, f);
    Dataset train = take_rows(ds, split.train);
    std::unique_ptr<Model> model;
    try {
      model = fit(spec, config, train.features, train.target, fold_fit_seed(seed, f, spec.kind));
    } catch (const std::exception& e) {
      throw std::runtime_error("oob fit failed for learner '" + spec.name + "' config " +
                               canonical_config(config) + " fold " + std::to_string(f) + ": " +
                               e.what());
    }
    Matrix held_out(static_cast<Eigen::Index>(split.test.size()), ds.p());
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      held_out.row(static_cast<Eigen::Index>(i)) =
          ds.features.row(static_cast<Eigen::Index>(split.test[i]));
    }
    Vector fold_predictions = model->predict_checked(held_out);
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      computed[s][static_cast<Eigen::Index>(split.test[i])] =
          fold_predictions[static_cast<Eigen::Index>(i)];
    }
  });

  for (std::size_t s = 0; s < pending.size(); ++s) {
    memo.store(keys[pending[s]], computed[s]);
  }
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (column_source[j] < 0) continue;  // served from the cache up front
    const std::size_t s = static_cast<std::size_t>(column_source[j]);
    if (pending[s] != j) {
      // A repeat of an earlier item in this call. Its first copy is stored
      // by now, so serving it counts as a genuine cache hit.
      if (auto found = memo.lookup(keys[j])) {
        out.columns.col(static_cast<Eigen::Index>(j)) = *found;
        continue;
      }
    }
    out.columns.col(static_cast<Eigen::Index>(j)) = computed[s];
  }
  return out;
}

}  // namespace gemith
