#include "gemith/experiment.hpp"

#include "gemith/parallel.hpp"
#include "gemith/rng.hpp"
#include "gemith/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace gemith {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string normalize_token(std::string token) {
  std::replace(token.begin(), token.end(), '-', '_');
  return token;
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; })) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!dataset_path.empty() && target_column.empty()) {
    throw std::invalid_argument("config: a dataset path needs a target column");
  }
  if (dataset_path.empty()) {
    if (generator.kind != "friedman1") {
      throw std::invalid_argument("config: unknown generator '" + generator.kind +
                                  "' (only friedman1)");
    }
    if (generator.n < 10) throw std::invalid_argument("config: generator n must be >= 10");
    if (generator.noise_sd < 0.0) {
      throw std::invalid_argument("config: generator noise_sd must be >= 0");
    }
  }
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw std::invalid_argument("config: test_fraction must lie strictly between 0 and 1");
  }
  if (folds < 2) throw std::invalid_argument("config: need at least 2 folds");
  if (repeats < 1) throw std::invalid_argument("config: need at least 1 repeat");
  if (methods.empty()) throw std::invalid_argument("config: no methods requested");
  if (learners.empty()) throw std::invalid_argument("config: no base learners given");
  std::unordered_set<std::string> seen;
  for (const std::string& name : learners) {
    learner_kind_from_name(name);  // throws on unknown names
    if (!seen.insert(name).second) {
      throw std::invalid_argument("config: base learner '" + name + "' listed twice");
    }
  }
  search.validate();
  if (combo_cap == 0) throw std::invalid_argument("config: combo_cap must be positive");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  reject_unknown_keys(j,
                      {"dataset", "generator", "test_fraction", "folds", "repeats", "methods",
                       "learners", "search", "seed", "combo_cap", "threads", "output_dir",
                       "cache_dir"},
                      "the top level");
  RunConfig cfg;
  if (j.contains("dataset")) {
    const nlohmann::json& d = j.at("dataset");
    reject_unknown_keys(d, {"path", "target"}, "dataset");
    cfg.dataset_path = d.value("path", cfg.dataset_path);
    cfg.target_column = d.value("target", cfg.target_column);
  }
  if (j.contains("generator")) {
    const nlohmann::json& g = j.at("generator");
    reject_unknown_keys(g, {"kind", "n", "noise_sd"}, "generator");
    cfg.generator.kind = g.value("kind", cfg.generator.kind);
    cfg.generator.n = g.value("n", cfg.generator.n);
    cfg.generator.noise_sd = g.value("noise_sd", cfg.generator.noise_sd);
  }
  cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
  cfg.folds = j.value("folds", cfg.folds);
  cfg.repeats = j.value("repeats", cfg.repeats);
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& name : j.at("methods")) {
      cfg.methods.push_back(ensemble_method_from_name(normalize_token(name.get<std::string>())));
    }
  }
  if (j.contains("learners")) {
    cfg.learners.clear();
    for (const auto& name : j.at("learners")) {
      cfg.learners.push_back(normalize_token(name.get<std::string>()));
    }
  }
  if (j.contains("search")) {
    const nlohmann::json& s = j.at("search");
    reject_unknown_keys(s, {"n_trials", "n_startup", "gamma", "n_ei_candidates", "b"}, "search");
    cfg.search.n_trials = s.value("n_trials", cfg.search.n_trials);
    cfg.search.n_startup = s.value("n_startup", cfg.search.n_startup);
    cfg.search.gamma = s.value("gamma", cfg.search.gamma);
    cfg.search.n_ei_candidates = s.value("n_ei_candidates", cfg.search.n_ei_candidates);
    cfg.search.b = s.value("b", cfg.search.b);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.combo_cap = j.value("combo_cap", cfg.combo_cap);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
  return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  if (!cfg.dataset_path.empty()) {
    j["dataset"] = {{"path", cfg.dataset_path}, {"target", cfg.target_column}};
  } else {
    j["generator"] = {{"kind", cfg.generator.kind},
                      {"n", cfg.generator.n},
                      {"noise_sd", cfg.generator.noise_sd}};
  }
  j["test_fraction"] = cfg.test_fraction;
  j["folds"] = cfg.folds;
  j["repeats"] = cfg.repeats;
  nlohmann::json methods = nlohmann::json::array();
  for (EnsembleMethod m : cfg.methods) methods.push_back(std::string(ensemble_method_name(m)));
  j["methods"] = std::move(methods);
  j["learners"] = cfg.learners;
  j["search"] = {{"n_trials", cfg.search.n_trials},
                 {"n_startup", cfg.search.n_startup},
                 {"gamma", cfg.search.gamma},
                 {"n_ei_candidates", cfg.search.n_ei_candidates},
                 {"b", cfg.search.b}};
  j["seed"] = cfg.seed;
  j["combo_cap"] = cfg.combo_cap;
  return j;
}

Dataset load_run_dataset(const RunConfig& cfg) {
  if (!cfg.dataset_path.empty()) {
    return load_csv(cfg.dataset_path, cfg.target_column);
  }
  return synthetic_friedman1(cfg.generator.n, cfg.generator.noise_sd,
                             derive_seed(cfg.seed, 0x67656EULL /* "gen" */));
}

namespace {

nlohmann::json config_entry_to_json(const std::string& learner, const HyperConfig& config) {
  nlohmann::json params;
  for (const auto& [name, value] : config.values) params[name] = value;
  return {{"learner", learner},
          {"kind", std::string(learner_kind_name(config.kind))},
          {"params", std::move(params)}};
}

nlohmann::json outcome_to_json(const MethodOutcome& mo) {
  nlohmann::json configs = nlohmann::json::array();
  for (std::size_t j = 0; j < mo.configs.size(); ++j) {
    configs.push_back(config_entry_to_json(mo.learner_names[j], mo.configs[j]));
  }
  return {{"method", std::string(ensemble_method_name(mo.method))},
          {"oob_objective", mo.oob_objective},
          {"test_mse", mo.test_mse},
          {"wall_time_sec", mo.wall_time_sec},
          {"configs", std::move(configs)},
          {"weights", mo.weights},
          {"combinations_evaluated", mo.combinations_evaluated},
          {"subsampled", mo.subsampled},
          {"underfilled", mo.underfilled}};
}

nlohmann::json repeat_to_json(const RepeatRecord& rr) {
  nlohmann::json methods = nlohmann::json::array();
  for (const MethodOutcome& mo : rr.methods) methods.push_back(outcome_to_json(mo));
  return {{"index", rr.index},
          {"seed", rr.seed},
          {"plan_seed", rr.plan_seed},
          {"failed", rr.failed},
          {"error", rr.error},
          {"wall_time_sec", rr.wall_time_sec},
          {"methods", std::move(methods)}};
}

}  // namespace

bool RunRecord::any_repeat_failed() const {
  return std::any_of(repeats.begin(), repeats.end(),
                     [](const RepeatRecord& r) { return r.failed; });
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json repeats_json = nlohmann::json::array();
  for (const RepeatRecord& rr : repeats) repeats_json.push_back(repeat_to_json(rr));
  nlohmann::json summary_json;
  for (const auto& [name, s] : summary) {
    summary_json[name] = {{"repeats_succeeded", s.repeats_succeeded},
                          {"mean_test_mse", s.mean_test_mse},
                          {"mean_oob_objective", s.mean_oob_objective},
                          {"mean_wall_time_sec", s.mean_wall_time_sec},
                          {"per_repeat_test_mse", s.per_repeat_test_mse}};
  }
  return {{"config", run_config_to_json(config)},
          {"version", version},
          {"repeats", std::move(repeats_json)},
          {"summary", std::move(summary_json)}};
}

namespace {

MethodOutcome build_method(EnsembleMethod method, const Dataset& train, const Dataset& test,
                           const TunedPool& pool, const FoldPlan& plan, const RunConfig& cfg,
                           std::uint64_t seed, OobCache* cache) {
  MethodOutcome mo;
  mo.method = method;
  Clock::time_point start = Clock::now();
  EnsembleModel model;
  switch (method) {
    case EnsembleMethod::Bem:
      model = bem_ensemble(train, pool, seed);
      break;
    case EnsembleMethod::Gem:
      model = gem_ensemble(train, pool, seed);
      break;
    case EnsembleMethod::GemIth: {
      GemIthResult result = gem_ith_ensemble(train, pool, plan, seed, cfg.combo_cap, cache);
      mo.combinations_evaluated = result.combinations_evaluated;
      mo.subsampled = result.subsampled;
      mo.underfilled = std::any_of(pool.candidates.begin(), pool.candidates.end(),
                                   [](const CandidateSet& cs) { return cs.underfilled; });
      model = std::move(result.model);
      break;
    }
    default:
      model = stacked(method, train, pool, seed);
      break;
  }
  mo.oob_objective = model.oob_objective;
  mo.test_mse = evaluate(model, test);
  for (const LearnerSpec& spec : model.specs) mo.learner_names.push_back(spec.name);
  mo.configs = model.configs;
  if (!is_stacked(method)) {
    mo.weights.assign(model.weights.w.data(), model.weights.w.data() + model.weights.w.size());
  }
  mo.wall_time_sec = seconds_since(start);
  return mo;
}

}  // namespace

RunRecord run_experiment(const RunConfig& cfg) {
  cfg.validate();
  set_max_threads(cfg.threads);

  Dataset full = load_run_dataset(cfg);
  std::vector<LearnerSpec> specs;
  specs.reserve(cfg.learners.size());
  for (const std::string& name : cfg.learners) {
    specs.push_back(default_spec(learner_kind_from_name(name)));
  }
  OobCache cache = cfg.cache_dir.empty() ? OobCache()
                                         : OobCache(std::filesystem::path(cfg.cache_dir));

  RunRecord record;
  record.config = cfg;
  record.version = std::string(kVersion);

  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    RepeatRecord rr;
    rr.index = r;
    rr.seed = derive_seed(cfg.seed, 0x726570656174ULL /* "repeat" */, r);
    rr.plan_seed = derive_seed(rr.seed, 0x706C616EULL /* "plan" */);
    Clock::time_point start = Clock::now();
    try {
      auto [train, test] = train_test_split(full, cfg.test_fraction, rr.seed);
      FoldPlan plan = make_fold_plan(static_cast<std::size_t>(train.n()), cfg.folds, rr.plan_seed);
      TunedPool pool = tune_learners(train, specs, plan, cfg.search, rr.seed, &cache);
      for (EnsembleMethod method : cfg.methods) {
        rr.methods.push_back(
            build_method(method, train, test, pool, plan, cfg, rr.seed, &cache));
      }
    } catch (const std::exception& e) {
      rr.failed = true;
      rr.error = e.what();
      rr.methods.clear();
    }
    rr.wall_time_sec = seconds_since(start);
    record.repeats.push_back(std::move(rr));
  }

  for (EnsembleMethod method : cfg.methods) {
    MethodSummary s;
    std::vector<double> oob, times;
    for (const RepeatRecord& rr : record.repeats) {
      if (rr.failed) continue;
      for (const MethodOutcome& mo : rr.methods) {
        if (mo.method != method) continue;
        ++s.repeats_succeeded;
        s.per_repeat_test_mse.push_back(mo.test_mse);
        oob.push_back(mo.oob_objective);
        times.push_back(mo.wall_time_sec);
      }
    }
    if (s.repeats_succeeded > 0) {
      s.mean_test_mse = compensated_mean(s.per_repeat_test_mse);
      s.mean_oob_objective = compensated_mean(oob);
      s.mean_wall_time_sec = compensated_mean(times);
    }
    record.summary[std::string(ensemble_method_name(method))] = std::move(s);
  }
  return record;
}

nlohmann::json strip_timing_fields(nlohmann::json j) {
  if (j.is_object()) {
    nlohmann::json out;
    for (const auto& [key, value] : j.items()) {
      if (key == "wall_time_sec" || key == "mean_wall_time_sec") continue;
      out[key] = strip_timing_fields(value);
    }
    return out;
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& value : j) out.push_back(strip_timing_fields(value));
    return out;
  }
  return j;
}

std::string Table::to_text() const {
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  auto render_row = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < widths.size(); ++c) {
      std::string cell = c < row.size() ? row[c] : "";
      cell.resize(widths[c], ' ');
      if (c > 0) line += "  ";
      line += cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    line += '\n';
    return line;
  };
  std::string out = render_row(header);
  std::string rule;
  for (std::size_t c = 0; c < widths.size(); ++c) {
    if (c > 0) rule += "  ";
    rule.append(widths[c], '-');
  }
  out += rule + '\n';
  for (const auto& row : rows) out += render_row(row);
  return out;
}

std::string Table::to_csv() const {
  auto escape = [](const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string quoted = "\"";
    for (char ch : cell) {
      if (ch == '"') quoted += '"';
      quoted += ch;
    }
    quoted += '"';
    return quoted;
  };
  auto render_row = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += ',';
      line += escape(row[c]);
    }
    line += '\n';
    return line;
  };
  std::string out = render_row(header);
  for (const auto& row : rows) out += render_row(row);
  return out;
}

Table summary_table(const RunRecord& record) {
  Table table;
  table.header = {"method", "mean_test_mse", "mean_oob_objective", "mean_wall_time_sec",
                  "repeats_succeeded"};
  for (EnsembleMethod method : record.config.methods) {
    const MethodSummary& s = record.summary.at(std::string(ensemble_method_name(method)));
    table.rows.push_back({std::string(ensemble_method_name(method)),
                          format_float17(s.mean_test_mse), format_float17(s.mean_oob_objective),
                          format_float17(s.mean_wall_time_sec),
                          std::to_string(s.repeats_succeeded)});
  }
  return table;
}

namespace {

/// learner -> (parameter -> value) from one method's "configs" array.
std::map<std::string, std::map<std::string, double>> config_map(const nlohmann::json& outcome) {
  std::map<std::string, std::map<std::string, double>> by_learner;
  for (const auto& entry : outcome.at("configs")) {
    auto& params = by_learner[entry.at("learner").get<std::string>()];
    for (const auto& [name, value] : entry.at("params").items()) {
      params[name] = value.get<double>();
    }
  }
  return by_learner;
}

const nlohmann::json* find_outcome(const nlohmann::json& repeat, std::string_view method) {
  for (const auto& outcome : repeat.at("methods")) {
    if (outcome.at("method").get<std::string>() == method) return &outcome;
  }
  return nullptr;
}

}  // namespace

Table report_hyperparams(const nlohmann::json& record) {
  for (const auto& repeat : record.at("repeats")) {
    if (repeat.at("failed").get<bool>()) continue;
    const nlohmann::json* gem_outcome = find_outcome(repeat, "gem");
    const nlohmann::json* ith_outcome = find_outcome(repeat, "gem_ith");
    if (!gem_outcome || !ith_outcome) continue;

    auto gem_configs = config_map(*gem_outcome);
    auto ith_configs = config_map(*ith_outcome);
    Table table;
    table.header = {"learner", "parameter", "gem", "gem_ith", "differs"};
    for (const auto& [learner, gem_params] : gem_configs) {
      auto it = ith_configs.find(learner);
      if (it == ith_configs.end()) continue;
      for (const auto& [name, gem_value] : gem_params) {
        auto pit = it->second.find(name);
        if (pit == it->second.end()) continue;
        bool differs = gem_value != pit->second;
        table.rows.push_back({learner, name, format_float17(gem_value),
                              format_float17(pit->second), differs ? "yes" : "no"});
      }
    }
    return table;
  }
  throw std::invalid_argument(
      "report: record has no successful repeat containing both gem and gem_ith");
}

Table report_timings(const nlohmann::json& record) {
  std::vector<std::string> method_names;
  for (const auto& name : record.at("config").at("methods")) {
    method_names.push_back(name.get<std::string>());
  }
  Table table;
  table.header = {"method", "mean_wall_time_sec", "total_wall_time_sec", "repeats"};
  char buf[40];
  CompensatedSum grand_total;
  for (const std::string& name : method_names) {
    std::vector<double> times;
    for (const auto& repeat : record.at("repeats")) {
      if (repeat.at("failed").get<bool>()) continue;
      if (const nlohmann::json* outcome = find_outcome(repeat, name)) {
        times.push_back(outcome->at("wall_time_sec").get<double>());
      }
    }
    CompensatedSum total;
    for (double t : times) total.add(t);
    grand_total.add(total.total());
    double mean = times.empty() ? 0.0 : total.total() / static_cast<double>(times.size());
    std::snprintf(buf, sizeof(buf), "%.3f", mean);
    std::string mean_str = buf;
    std::snprintf(buf, sizeof(buf), "%.3f", total.total());
    table.rows.push_back({name, mean_str, buf, std::to_string(times.size())});
  }
  std::snprintf(buf, sizeof(buf), "%.3f", grand_total.total());
  table.rows.push_back({"total", "", buf, ""});
  return table;
}

void save_run_outputs(const RunRecord& record, const std::string& dir) {
  std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  auto write_file = [&](const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("run: cannot open '" + path.string() + "' for writing");
    out << contents;
    if (!out) throw std::runtime_error("run: write to '" + path.string() + "' failed");
  };
  write_file(base / "record.json", record.to_json().dump(2) + "\n");
  Table summary = summary_table(record);
  write_file(base / "summary.csv", summary.to_csv());
  write_file(base / "summary.txt", summary.to_text());
}

}  // namespace gemith
