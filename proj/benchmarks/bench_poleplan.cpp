#include <benchmark/benchmark.h>

#include <map>

#include "poleplan/coverage.hpp"
#include "poleplan/geo.hpp"
#include "poleplan/immune.hpp"
#include "poleplan/ingest.hpp"
#include "poleplan/rng.hpp"

using namespace poleplan;

namespace {

// Square box of `side_m` metres near Boston.
geo::BBoxLTRD square(double side_m) {
  const double dlat = side_m / geo::meters_per_degree_lat();
  const double dlon = side_m / geo::meters_per_degree_lon(42.36);
  return {geo::GeoPoint(42.36 + dlat / 2, -71.10 - dlon / 2),
          geo::GeoPoint(42.36 - dlat / 2, -71.10 + dlon / 2)};
}

std::vector<ingest::PoleCandidate> random_candidates(const geo::BBoxLTRD& box, std::size_t n) {
  Rng rng(7);
  std::vector<ingest::PoleCandidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({i,
                   geo::GeoPoint(rng.uniform(box.south(), box.north()),
                                 rng.uniform(box.west(), box.east())),
                   1.0, 1});
  }
  return out;
}

const coverage::PlanProblem& problem(std::size_t n) {
  static std::map<std::size_t, coverage::PlanProblem> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    const auto box = square(4990);
    it = cache.emplace(n, coverage::build_problem(random_candidates(box, n), box, 150, 50, {}))
             .first;
  }
  return it->second;
}

BitVec random_selection(std::size_t n, double density, std::uint64_t seed) {
  Rng rng(seed);
  BitVec b(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < density) b.set(i);
  }
  return b;
}

}  // namespace

static void BM_BuildProblem(benchmark::State& state) {
  const auto box = square(4990);
  const auto cands = random_candidates(box, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto p = coverage::build_problem(cands, box, 150, 50, {});
    benchmark::DoNotOptimize(p.n_coverable);
  }
}
BENCHMARK(BM_BuildProblem)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_Haversine(benchmark::State& state) {
  const geo::GeoPoint a(42.36, -71.10), b(42.361, -71.102);
  for (auto _ : state) benchmark::DoNotOptimize(geo::haversine_m(a, b));
}
BENCHMARK(BM_Haversine);

static void BM_CoverageCount(benchmark::State& state) {
  const auto& p = problem(2000);
  const auto sel = random_selection(p.n_candidates(), 0.3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(coverage::coverage_count(p, sel).covered);
}
BENCHMARK(BM_CoverageCount);

static void BM_Evaluator(benchmark::State& state) {
  const auto& p = problem(2000);
  const auto sel = random_selection(p.n_candidates(), 0.3, 2);
  coverage::CoverageEvaluator eval(p);
  for (auto _ : state) benchmark::DoNotOptimize(eval.covered(sel));
}
BENCHMARK(BM_Evaluator);

static void BM_Fitness(benchmark::State& state) {
  const auto& p = problem(2000);
  const auto sel = random_selection(p.n_candidates(), 0.3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(immune::fitness(p, sel));
}
BENCHMARK(BM_Fitness);

static void BM_Step(benchmark::State& state) {
  const auto& p = problem(2000);
  immune::ImmuneParams params;
  Rng rng(4);
  auto pop = immune::init_population(p, params, rng);
  auto elite = pop.front();
  for (auto _ : state) {
    auto [next, best] = immune::step(p, params, pop, rng, elite);
    pop = std::move(next);
    elite = std::move(best);
  }
}
BENCHMARK(BM_Step)->Unit(benchmark::kMillisecond);

static void BM_Greedy(benchmark::State& state) {
  const auto& p = problem(2000);
  for (auto _ : state) benchmark::DoNotOptimize(immune::greedy_cover(p).count());
}
BENCHMARK(BM_Greedy)->Unit(benchmark::kMillisecond);

static void BM_Prune(benchmark::State& state) {
  const auto& p = problem(2000);
  const auto sel = random_selection(p.n_candidates(), 0.6, 5);
  for (auto _ : state) benchmark::DoNotOptimize(coverage::prune_redundant(p, sel).count());
}
BENCHMARK(BM_Prune)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
