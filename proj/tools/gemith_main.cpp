#include "gemith/dataset.hpp"
#include "gemith/diagnostics.hpp"
#include "gemith/ensembles.hpp"
#include "gemith/experiment.hpp"
#include "gemith/parallel.hpp"
#include "gemith/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace gemith;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitPartialFailure = 2;

std::string cache_dir_or_env(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const char* env = std::getenv("GEMITH_CACHE_DIR");
  return env ? env : "";
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return nlohmann::json::parse(in);
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------- run ----

struct RunCli {
  std::string config_path;
  std::string dataset_path, target;
  std::string generator_kind;
  std::size_t gen_n = 0;
  double noise_sd = 0.0;
  double test_fraction = 0.0;
  std::size_t folds = 0, repeats = 0;
  std::vector<std::string> methods, learners;
  std::size_t n_trials = 0, n_startup = 0, n_ei_candidates = 0, b = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::size_t combo_cap = 0;
  int threads = -1;
  std::string output_dir, cache_dir;
};

void add_run_options(CLI::App* sub, RunCli& cli) {
  sub->add_option("--config", cli.config_path, "JSON config file; flags override its fields");
  sub->add_option("--dataset", cli.dataset_path, "CSV file to model");
  sub->add_option("--target", cli.target, "target column name in the CSV");
  sub->add_option("--generator", cli.generator_kind, "synthetic data source (friedman1)");
  sub->add_option("--n", cli.gen_n, "synthetic sample size");
  sub->add_option("--noise-sd", cli.noise_sd, "synthetic noise standard deviation");
  sub->add_option("--test-fraction", cli.test_fraction, "held-out fraction per repeat");
  sub->add_option("--folds", cli.folds, "cross-validation folds");
  sub->add_option("--repeats", cli.repeats, "train/test repetitions");
  sub->add_option("--methods", cli.methods, "ensemble methods to run")->delimiter(',');
  sub->add_option("--learners", cli.learners, "base learner kinds")->delimiter(',');
  sub->add_option("--n-trials", cli.n_trials, "search trials per learner");
  sub->add_option("--n-startup", cli.n_startup, "random warmup trials");
  sub->add_option("--gamma", cli.gamma, "good/bad split quantile");
  sub->add_option("--n-ei-candidates", cli.n_ei_candidates, "candidate draws per suggestion");
  sub->add_option("--b", cli.b, "candidate configs kept per learner");
  sub->add_option("--seed", cli.seed, "base seed");
  sub->add_option("--combo-cap", cli.combo_cap, "max combinations enumerated");
  sub->add_option("--threads", cli.threads, "worker threads (0 = all cores)");
  sub->add_option("--output-dir", cli.output_dir, "directory for record.json and summaries");
  sub->add_option("--cache-dir", cli.cache_dir,
                  "on-disk prediction cache (or env GEMITH_CACHE_DIR)");
}

RunConfig run_config_from_cli(const CLI::App* sub, const RunCli& cli) {
  nlohmann::json j =
      cli.config_path.empty() ? nlohmann::json::object() : load_json_file(cli.config_path);
  auto given = [&](const std::string& flag) { return sub->count(flag) > 0; };
  if (given("--dataset")) j["dataset"]["path"] = cli.dataset_path;
  if (given("--target")) j["dataset"]["target"] = cli.target;
  if (given("--generator")) j["generator"]["kind"] = cli.generator_kind;
  if (given("--n")) j["generator"]["n"] = cli.gen_n;
  if (given("--noise-sd")) j["generator"]["noise_sd"] = cli.noise_sd;
  if (given("--test-fraction")) j["test_fraction"] = cli.test_fraction;
  if (given("--folds")) j["folds"] = cli.folds;
  if (given("--repeats")) j["repeats"] = cli.repeats;
  if (given("--methods")) j["methods"] = cli.methods;
  if (given("--learners")) j["learners"] = cli.learners;
  if (given("--n-trials")) j["search"]["n_trials"] = cli.n_trials;
  if (given("--n-startup")) j["search"]["n_startup"] = cli.n_startup;
  if (given("--gamma")) j["search"]["gamma"] = cli.gamma;
  if (given("--n-ei-candidates")) j["search"]["n_ei_candidates"] = cli.n_ei_candidates;
  if (given("--b")) j["search"]["b"] = cli.b;
  if (given("--seed")) j["seed"] = cli.seed;
  if (given("--combo-cap")) j["combo_cap"] = cli.combo_cap;
  if (given("--threads")) j["threads"] = cli.threads;
  if (given("--output-dir")) j["output_dir"] = cli.output_dir;
  if (given("--cache-dir")) j["cache_dir"] = cli.cache_dir;
  RunConfig cfg = run_config_from_json(j);
  cfg.cache_dir = cache_dir_or_env(cfg.cache_dir);
  return cfg;
}

int command_run(const CLI::App* sub, const RunCli& cli) {
  RunConfig cfg = run_config_from_cli(sub, cli);
  cfg.validate();
  RunRecord record = run_experiment(cfg);

  for (const RepeatRecord& rr : record.repeats) {
    if (rr.failed) {
      std::cerr << "warning: repeat " << rr.index << " failed: " << rr.error << '\n';
      continue;
    }
    for (const MethodOutcome& mo : rr.methods) {
      if (mo.subsampled) {
        std::cerr << "warning: repeat " << rr.index << ": enumeration capped at "
                  << mo.combinations_evaluated << " combinations (seeded subsample)\n";
      }
      if (mo.underfilled) {
        std::cerr << "warning: repeat " << rr.index
                  << ": fewer distinct candidate configs than requested\n";
      }
    }
  }

  std::cout << summary_table(record).to_text();
  if (!cfg.output_dir.empty()) {
    save_run_outputs(record, cfg.output_dir);
    std::cout << "outputs written to " << cfg.output_dir << '\n';
  }
  return record.any_repeat_failed() ? kExitPartialFailure : kExitOk;
}

// ---------------------------------------------------------------- gen ----

struct GenCli {
  std::string kind = "friedman1";
  std::size_t n = 500;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
  std::string out;
};

int command_gen(const GenCli& cli) {
  if (cli.kind != "friedman1") {
    throw std::invalid_argument("unknown generator '" + cli.kind + "' (only friedman1)");
  }
  Dataset ds = synthetic_friedman1(cli.n, cli.noise_sd, cli.seed);
  save_csv(ds, cli.out);
  std::cout << "wrote " << ds.n() << " rows x " << ds.p() << " features + target to " << cli.out
            << '\n';
  return kExitOk;
}

// ----------------------------------------------------- select-learners ----

struct SelectCli {
  std::string dataset_path, target;
  std::size_t gen_n = 400;
  double noise_sd = 1.0;
  std::size_t folds = 5;
  std::size_t n_trials = 30, n_startup = 5, n_ei_candidates = 24, b = 12;
  double gamma = 0.25;
  std::vector<std::string> pool;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string cache_dir;
  bool as_json = false;
};

int command_select(const SelectCli& cli) {
  set_max_threads(cli.threads);
  Dataset ds;
  if (!cli.dataset_path.empty()) {
    if (cli.target.empty()) throw std::invalid_argument("--target is required with --dataset");
    ds = load_csv(cli.dataset_path, cli.target);
  } else {
    ds = synthetic_friedman1(cli.gen_n, cli.noise_sd, derive_seed(cli.seed, 0x67656EULL));
  }

  std::vector<LearnerSpec> pool;
  if (cli.pool.empty()) {
    pool = default_spaces();
  } else {
    for (const std::string& name : cli.pool) pool.push_back(default_spec(learner_kind_from_name(name)));
  }

  SearchParams search{cli.n_trials, cli.n_startup, cli.gamma, cli.n_ei_candidates, cli.b};
  FoldPlan plan = make_fold_plan(static_cast<std::size_t>(ds.n()), cli.folds,
                                 derive_seed(cli.seed, 0x706C616EULL));
  std::string cache_dir = cache_dir_or_env(cli.cache_dir);
  std::optional<OobCache> disk_cache;
  if (!cache_dir.empty()) disk_cache.emplace(cache_dir);
  SelectionReport report = select_base_learners(ds, pool, plan, search, cli.seed,
                                                disk_cache ? &*disk_cache : nullptr);

  if (cli.as_json) {
    nlohmann::json j;
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      entries.push_back({{"learner", pool[i].name}, {"oob_mse", report.pool_mse[i]}});
    }
    j["pool"] = std::move(entries);
    j["pruned"] = report.pruned;
    j["restored"] = report.restored;
    nlohmann::json chosen = nlohmann::json::array();
    for (const LearnerSpec& spec : report.specs) chosen.push_back(spec.name);
    j["chosen"] = std::move(chosen);
    std::cout << j.dump(2) << '\n';
    return kExitOk;
  }

  Table mse_table;
  mse_table.header = {"learner", "oob_mse", "status"};
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::string status = "survivor";
    if (std::find(report.pruned.begin(), report.pruned.end(), i) != report.pruned.end()) {
      status = std::find(report.restored.begin(), report.restored.end(), i) !=
                       report.restored.end()
                   ? "restored"
                   : "pruned";
    }
    if (std::find(report.chosen.begin(), report.chosen.end(), i) != report.chosen.end()) {
      status = "chosen";
    }
    mse_table.rows.push_back({pool[i].name, format_float17(report.pool_mse[i]), status});
  }
  std::cout << mse_table.to_text() << '\n';

  Table corr;
  corr.header = {"correlation"};
  for (std::size_t i : report.survivors) corr.header.push_back(pool[i].name);
  for (std::size_t a = 0; a < report.survivors.size(); ++a) {
    std::vector<std::string> row{pool[report.survivors[a]].name};
    for (std::size_t b = 0; b < report.survivors.size(); ++b) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f",
                    report.correlations(static_cast<Eigen::Index>(a),
                                        static_cast<Eigen::Index>(b)));
      row.push_back(buf);
    }
    corr.rows.push_back(std::move(row));
  }
  std::cout << corr.to_text() << '\n';

  std::cout << "chosen:";
  for (const LearnerSpec& spec : report.specs) std::cout << ' ' << spec.name;
  std::cout << '\n';
  return kExitOk;
}

// -------------------------------------------------------- bias-variance ----

struct BvCli {
  std::string learner = "ridge";
  std::string method;
  std::string params_json;
  std::size_t n_train = 200, n_test = 500, reps = 200;
  double noise_sd = 1.0;
  std::size_t folds = 5;
  std::vector<std::string> learners = {"ridge", "elastic_net", "knn", "tree"};
  std::size_t n_trials = 12, n_startup = 5, n_ei_candidates = 24, b = 3;
  double gamma = 0.25;
  std::size_t combo_cap = kDefaultComboCap;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
};

HyperConfig representative_config(LearnerKind kind) {
  HyperConfig config;
  config.kind = kind;
  switch (kind) {
    case LearnerKind::Ridge:
      config.values = {{"alpha", 1e-3}};
      break;
    case LearnerKind::ElasticNet:
      config.values = {{"alpha", 1e-3}, {"l1_ratio", 0.5}};
      break;
    case LearnerKind::Knn:
      config.values = {{"n_neighbors", 5.0}};
      break;
    case LearnerKind::Tree:
      config.values = {{"max_depth", 8.0}};
      break;
    case LearnerKind::RandomForest:
      config.values = {{"n_estimators", 100.0}, {"max_depth", 8.0}};
      break;
    case LearnerKind::GradientBoosting:
      config.values = {{"n_estimators", 100.0}, {"learning_rate", 1.0}};
      break;
  }
  return config;
}

int command_bias_variance(const BvCli& cli) {
  set_max_threads(cli.threads);
  Friedman1Generator generator(cli.noise_sd);

  FitProcedure fit_proc;
  if (!cli.method.empty()) {
    EnsembleMethod method = ensemble_method_from_name(cli.method);
    std::vector<LearnerSpec> specs;
    for (const std::string& name : cli.learners) {
      specs.push_back(default_spec(learner_kind_from_name(name)));
    }
    SearchParams search{cli.n_trials, cli.n_startup, cli.gamma, cli.n_ei_candidates, cli.b};
    std::size_t folds = cli.folds;
    std::size_t combo_cap = cli.combo_cap;
    fit_proc = [specs, search, folds, combo_cap, method](const Dataset& train,
                                                         std::uint64_t seed) -> Predictor {
      FoldPlan plan = make_fold_plan(static_cast<std::size_t>(train.n()), folds,
                                     derive_seed(seed, 0x706C616EULL));
      OobCache cache;
      TunedPool pool = tune_learners(train, specs, plan, search, seed, &cache);
      EnsembleModel model;
      switch (method) {
        case EnsembleMethod::Bem:
          model = bem_ensemble(train, pool, seed);
          break;
        case EnsembleMethod::Gem:
          model = gem_ensemble(train, pool, seed);
          break;
        case EnsembleMethod::GemIth:
          model = gem_ith_ensemble(train, pool, plan, seed, combo_cap, &cache).model;
          break;
        default:
          model = stacked(method, train, pool, seed);
          break;
      }
      auto shared = std::make_shared<EnsembleModel>(std::move(model));
      return [shared](const Matrix& X) { return predict_test(*shared, X); };
    };
  } else {
    LearnerSpec spec = default_spec(learner_kind_from_name(cli.learner));
    HyperConfig config = representative_config(spec.kind);
    if (!cli.params_json.empty()) {
      for (const auto& [name, value] : nlohmann::json::parse(cli.params_json).items()) {
        config.values[name] = value.get<double>();
      }
    }
    fit_proc = [spec, config](const Dataset& train, std::uint64_t seed) -> Predictor {
      std::shared_ptr<Model> model = fit(spec, config, train.features, train.target, seed);
      return [model](const Matrix& X) { return model->predict(X); };
    };
  }

  BVReport report =
      bias_variance_estimate(fit_proc, generator, cli.n_train, cli.n_test, cli.reps, cli.seed);
  nlohmann::json j = {{"bias_sq", report.bias_sq},
                      {"variance", report.variance},
                      {"noise_var", report.noise_var},
                      {"total_mse", report.total_mse},
                      {"decomposition_gap", report.decomposition_gap},
                      {"reps", report.reps},
                      {"n_test", report.n_test}};
  std::string rendered = j.dump(2) + "\n";
  if (cli.out.empty()) {
    std::cout << rendered;
  } else {
    write_text_file(cli.out, rendered);
  }
  return kExitOk;
}

// ------------------------------------------------------------- report ----

struct ReportCli {
  std::string record_path;
  bool hyperparams = false;
  bool timings = false;
  bool as_csv = false;
};

int command_report(const ReportCli& cli) {
  nlohmann::json record = load_json_file(cli.record_path);
  bool both = !cli.hyperparams && !cli.timings;
  auto render = [&](const Table& table) { return cli.as_csv ? table.to_csv() : table.to_text(); };
  if (cli.hyperparams || both) {
    std::cout << render(report_hyperparams(record));
    if (both) std::cout << '\n';
  }
  if (cli.timings || both) {
    std::cout << render(report_timings(record));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression-ensemble toolkit: simplex-weighted blends (with hyperparameter "
               "search folded into the weighting), stacking, and diagnostics"};
  app.set_version_flag("--version", "gemith " + std::string(kVersion));
  app.require_subcommand(1);

  RunCli run_cli;
  CLI::App* run_sub = app.add_subcommand("run", "run the full train/evaluate protocol");
  add_run_options(run_sub, run_cli);

  GenCli gen_cli;
  CLI::App* gen_sub = app.add_subcommand("gen", "write a synthetic dataset as CSV");
  gen_sub->add_option("--kind", gen_cli.kind, "generator (friedman1)");
  gen_sub->add_option("--n", gen_cli.n, "rows");
  gen_sub->add_option("--noise-sd", gen_cli.noise_sd, "noise standard deviation");
  gen_sub->add_option("--seed", gen_cli.seed, "seed");
  gen_sub->add_option("--out", gen_cli.out, "output CSV path")->required();

  SelectCli select_cli;
  CLI::App* select_sub =
      app.add_subcommand("select-learners", "pick the four-learner pool by error and correlation");
  select_sub->add_option("--dataset", select_cli.dataset_path, "CSV file");
  select_sub->add_option("--target", select_cli.target, "target column name");
  select_sub->add_option("--n", select_cli.gen_n, "synthetic sample size (no --dataset)");
  select_sub->add_option("--noise-sd", select_cli.noise_sd, "synthetic noise sd");
  select_sub->add_option("--folds", select_cli.folds, "cross-validation folds");
  select_sub->add_option("--pool", select_cli.pool, "candidate learner kinds")->delimiter(',');
  select_sub->add_option("--n-trials", select_cli.n_trials, "search trials per learner");
  select_sub->add_option("--n-startup", select_cli.n_startup, "random warmup trials");
  select_sub->add_option("--gamma", select_cli.gamma, "good/bad split quantile");
  select_sub->add_option("--n-ei-candidates", select_cli.n_ei_candidates,
                         "candidate draws per suggestion");
  select_sub->add_option("--b", select_cli.b, "candidate configs kept per learner");
  select_sub->add_option("--seed", select_cli.seed, "seed");
  select_sub->add_option("--threads", select_cli.threads, "worker threads (0 = all cores)");
  select_sub->add_option("--cache-dir", select_cli.cache_dir, "on-disk prediction cache");
  select_sub->add_flag("--json", select_cli.as_json, "emit JSON instead of tables");

  BvCli bv_cli;
  CLI::App* bv_sub =
      app.add_subcommand("bias-variance", "decompose a model's error on synthetic data");
  bv_sub->add_option("--learner", bv_cli.learner, "single learner kind to decompose");
  bv_sub->add_option("--method", bv_cli.method, "decompose a full ensemble method instead");
  bv_sub->add_option("--params", bv_cli.params_json, "JSON object overriding learner params");
  bv_sub->add_option("--n-train", bv_cli.n_train, "training rows per rep");
  bv_sub->add_option("--n-test", bv_cli.n_test, "fixed test grid size");
  bv_sub->add_option("--reps", bv_cli.reps, "independent refits");
  bv_sub->add_option("--noise-sd", bv_cli.noise_sd, "generator noise sd");
  bv_sub->add_option("--folds", bv_cli.folds, "folds (ensemble methods)");
  bv_sub->add_option("--learners", bv_cli.learners, "base learners (ensemble methods)")
      ->delimiter(',');
  bv_sub->add_option("--n-trials", bv_cli.n_trials, "search trials (ensemble methods)");
  bv_sub->add_option("--b", bv_cli.b, "candidates per learner (ensemble methods)");
  bv_sub->add_option("--combo-cap", bv_cli.combo_cap, "max combinations enumerated");
  bv_sub->add_option("--seed", bv_cli.seed, "seed");
  bv_sub->add_option("--threads", bv_cli.threads, "worker threads (0 = all cores)");
  bv_sub->add_option("--out", bv_cli.out, "write the JSON report here instead of stdout");

  ReportCli report_cli;
  CLI::App* report_sub = app.add_subcommand("report", "render tables from a saved run record");
  report_sub->add_option("--record", report_cli.record_path, "record.json from a run")->required();
  report_sub->add_flag("--hyperparams", report_cli.hyperparams,
                       "only the hyperparameter comparison");
  report_sub->add_flag("--timings", report_cli.timings, "only the timing table");
  report_sub->add_flag("--csv", report_cli.as_csv, "CSV instead of aligned text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Folds CLI11's many parse-error codes into the documented config-error
    // code; --help and --version still exit 0.
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run_sub->parsed()) return command_run(run_sub, run_cli);
    if (gen_sub->parsed()) return command_gen(gen_cli);
    if (select_sub->parsed()) return command_select(select_cli);
    if (bv_sub->parsed()) return command_bias_variance(bv_cli);
    if (report_sub->parsed()) return command_report(report_cli);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}
