#pragma once

#include "gemith/dataset.hpp"
#include "gemith/ensembles.hpp"
#include "gemith/search.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gemith {

inline constexpr std::string_view kVersion = "0.1.0";

/// Synthetic data source for runs without a CSV ("friedman1" is the only
/// kind).
struct GeneratorConfig {
  std::string kind = "friedman1";
  std::size_t n = 500;
  double noise_sd = 1.0;
};

/// Everything one experiment needs. The last three fields (threads,
/// output_dir, cache_dir) are environment, not experiment identity: they
/// never influence results and are excluded from the record echo, so runs
/// differing only in them produce identical records.
struct RunConfig {
  std::string dataset_path;   // empty: use the generator
  std::string target_column;  // required with dataset_path
  GeneratorConfig generator;
  double test_fraction = 0.2;
  std::size_t folds = 5;
  std::size_t repeats = 5;
  std::vector<EnsembleMethod> methods = {
      EnsembleMethod::Bem,           EnsembleMethod::Gem,          EnsembleMethod::GemIth,
      EnsembleMethod::StackedLinear, EnsembleMethod::StackedForest, EnsembleMethod::StackedKnn,
  };
  std::vector<std::string> learners = {"ridge", "elastic_net", "knn", "tree"};
  SearchParams search;
  std::uint64_t seed = 1;
  std::size_t combo_cap = kDefaultComboCap;

  int threads = 0;         // 0: all hardware threads
  std::string output_dir;  // empty: write nothing
  std::string cache_dir;   // empty: in-memory cache only

  /// Throws std::invalid_argument on any out-of-range or inconsistent
  /// field, before any compute starts.
  void validate() const;
};

/// JSON round-trip for config files. Parsing accepts any subset of keys
/// (missing ones keep defaults) and rejects unknown ones; serialization
/// omits the environment fields.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// One method's result within one repeat.
struct MethodOutcome {
  EnsembleMethod method = EnsembleMethod::Bem;
  double oob_objective = 0.0;
  double test_mse = 0.0;
  double wall_time_sec = 0.0;
  std::vector<std::string> learner_names;  // aligned with configs
  std::vector<HyperConfig> configs;
  std::vector<double> weights;             // empty for stacked methods
  std::size_t combinations_evaluated = 0;  // enumeration methods only
  bool subsampled = false;
  bool underfilled = false;
};

/// One train/test repetition. On failure the error carries the cause and
/// no method outcomes are recorded.
struct RepeatRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;       // split + tuning seed for this repeat
  std::uint64_t plan_seed = 0;  // fold-plan seed
  bool failed = false;
  std::string error;
  double wall_time_sec = 0.0;
  std::vector<MethodOutcome> methods;
};

struct MethodSummary {
  std::size_t repeats_succeeded = 0;
  double mean_test_mse = 0.0;
  double mean_oob_objective = 0.0;
  double mean_wall_time_sec = 0.0;
  std::vector<double> per_repeat_test_mse;
};

/// Full record of a run: enough to replay it (config echo + seeds) and to
/// regenerate every report.
struct RunRecord {
  RunConfig config;
  std::string version;
  std::vector<RepeatRecord> repeats;
  std::map<std::string, MethodSummary> summary;  // keyed by method name

  bool any_repeat_failed() const;
  nlohmann::json to_json() const;  // keys sorted; floats round-trip exactly
};

/// Load the CSV or draw the synthetic dataset a RunConfig describes.
Dataset load_run_dataset(const RunConfig& cfg);

/// Execute the full protocol: per repeat, split train/test, tune the base
/// learners once, then build and evaluate every requested method on the
/// shared tuning. A failing repeat is recorded with its cause and the
/// remaining repeats proceed. Deterministic for a given (config, seed) at
/// any thread count.
RunRecord run_experiment(const RunConfig& cfg);

/// Remove every "wall_time_sec" field, at any depth. Two records of
/// identical runs compare byte-equal after this.
nlohmann::json strip_timing_fields(nlohmann::json j);

/// Rows of strings with a header, renderable as aligned text or CSV.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_text() const;
  std::string to_csv() const;
};

/// Per-method mean test MSE (and friends) over the successful repeats.
Table summary_table(const RunRecord& record);

/// Side-by-side chosen hyperparameters of the independent-tuning blend
/// versus the enumerated blend, from the first successful repeat holding
/// both; the last column flags rows whose values differ. Throws when a
/// record lacks either method.
Table report_hyperparams(const nlohmann::json& record);

/// Wall time per method (mean and total over successful repeats), with a
/// closing total row.
Table report_timings(const nlohmann::json& record);

/// Write record.json, summary.csv, and summary.txt under `dir` (created
/// if needed).
void save_run_outputs(const RunRecord& record, const std::string& dir);

}  // namespace gemith
