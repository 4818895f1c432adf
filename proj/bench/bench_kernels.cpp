// Times the two parallel kernels (out-of-fold matrix construction and the
// per-combination weight enumeration) against the single-threaded path, and
// checks that both thread counts produce bit-identical results. Build and run
// by hand; this is not part of the test suite.

#include "gemith/dataset.hpp"
#include "gemith/ensembles.hpp"
#include "gemith/oob.hpp"
#include "gemith/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace gemith;

namespace {

double now_sec() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <class F>
double timed(F&& fn) {
  const double t0 = now_sec();
  fn();
  return now_sec() - t0;
}

std::vector<OobItem> make_items(const std::vector<LearnerSpec>& specs,
                                const std::vector<std::vector<HyperConfig>>& candidates) {
  std::vector<OobItem> items;
  for (std::size_t j = 0; j < specs.size(); ++j)
    for (const auto& cfg : candidates[j]) items.emplace_back(specs[j], cfg);
  return items;
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-24s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   %s\n", name, serial,
              parallel, parallel > 0 ? serial / parallel : 0.0,
              identical ? "results identical" : "RESULTS DIFFER");
}

}  // namespace

int main() {
  const Dataset ds = synthetic_friedman1(400, 1.0, 7);
  const FoldPlan plan = make_fold_plan(400, 5, 11);

  // Candidate grids: ridge/elastic-net alphas plus tree depths, sized so the
  // cross product gives the enumeration something to chew on.
  std::vector<LearnerSpec> specs = {default_spec(LearnerKind::Ridge),
                                    default_spec(LearnerKind::ElasticNet),
                                    default_spec(LearnerKind::Tree),
                                    default_spec(LearnerKind::Knn)};
  std::vector<std::vector<HyperConfig>> candidates(specs.size());
  for (int i = 0; i < 6; ++i) {
    const double alpha = 1e-4 * std::pow(10.0, i * 0.8);
    candidates[0].push_back({LearnerKind::Ridge, {{"alpha", alpha}}});
    candidates[1].push_back({LearnerKind::ElasticNet, {{"alpha", alpha}, {"l1_ratio", 0.3}}});
    candidates[2].push_back({LearnerKind::Tree, {{"max_depth", 4.0 + 2 * i}}});
    candidates[3].push_back({LearnerKind::Knn, {{"n_neighbors", 2.0 + i}}});
  }
  const std::vector<OobItem> items = make_items(specs, candidates);

  std::printf("out-of-fold items: %zu, combinations: %zu\n", items.size(),
              candidates[0].size() * candidates[1].size() * candidates[2].size() *
                  candidates[3].size());
  std::printf("hardware threads: %d\n\n", hardware_threads());

  // Kernel 1: the out-of-fold matrix (item x fold fit grid).
  OobMatrix serial_m, parallel_m;
  set_max_threads(1);
  const double t_serial_oob = timed([&] { serial_m = oob_matrix(ds, items, plan, 3, nullptr); });
  set_max_threads(0);
  const double t_parallel_oob =
      timed([&] { parallel_m = oob_matrix(ds, items, plan, 3, nullptr); });
  const bool oob_same = serial_m.columns == parallel_m.columns;
  report("oob_matrix", t_serial_oob, t_parallel_oob, oob_same);

  // Kernel 2: the combination enumeration (one QP per combination). A warm
  // cache isolates the enumeration itself from the fold fits.
  OobCache cache;
  oob_matrix(ds, items, plan, 3, &cache);
  GemIthResult serial_g, parallel_g;
  set_max_threads(1);
  const double t_serial_enum = timed([&] {
    serial_g = gem_ith_from_candidates(ds, specs, candidates, plan, 3, kDefaultComboCap, &cache,
                                       /*keep_trace=*/true, /*refit=*/false);
  });
  set_max_threads(0);
  const double t_parallel_enum = timed([&] {
    parallel_g = gem_ith_from_candidates(ds, specs, candidates, plan, 3, kDefaultComboCap, &cache,
                                         /*keep_trace=*/true, /*refit=*/false);
  });
  const bool enum_same = serial_g.best_objective == parallel_g.best_objective &&
                         serial_g.best_digits == parallel_g.best_digits &&
                         serial_g.objective_trace == parallel_g.objective_trace &&
                         serial_g.weights.w == parallel_g.weights.w;
  report("gem_ith enumeration", t_serial_enum, t_parallel_enum, enum_same);

  return (oob_same && enum_same) ? 0 : 1;
}
