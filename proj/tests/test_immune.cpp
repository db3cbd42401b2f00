#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "poleplan/error.hpp"
#include "poleplan/immune.hpp"

using namespace poleplan;
using coverage::PlanProblem;
using immune::ImmuneParams;

namespace {

BitVec sel(std::string_view bits) { return BitVec::from_string(bits); }

// A={d0,d1}, B={d0..d3}, C={d2,d3}
PlanProblem abc() { return coverage::problem_from_rows(4, {{0, 1}, {0, 1, 2, 3}, {2, 3}}); }

}  // namespace

TEST_SUITE("immune.fitness") {
  TEST_CASE("defining formula") {
    auto p = coverage::problem_from_rows(10, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {}, {}, {}});
    REQUIRE(p.n_coverable == 10);
    CHECK(immune::fitness(p, sel("1000")) == doctest::Approx(11.75));
    CHECK(immune::fitness(p, sel("0000")) == doctest::Approx(1.0));
    CHECK(immune::fitness(p, sel("1111")) == doctest::Approx(11.0));
    CHECK_THROWS_AS(immune::fitness(p, sel("10")), InvalidArgument);
  }

  TEST_CASE("coverage dominates size on random instances") {
    Rng rng(31);
    int violations = 0, compared = 0;
    for (int t = 0; t < 200; ++t) {
      auto p = oracle::random_set_instance(rng, 1 + rng.below(40), 1 + rng.below(120), 0.1);
      for (int k = 0; k < 20; ++k) {
        BitVec x(p.n_candidates()), y(p.n_candidates());
        for (std::size_t i = 0; i < p.n_candidates(); ++i) {
          x.set(i, rng.bernoulli(0.3));
          y.set(i, rng.bernoulli(0.7));
        }
        const auto cx = coverage::coverage_count(p, x).cov;
        const auto cy = coverage::coverage_count(p, y).cov;
        if (cx == cy) continue;
        ++compared;
        const bool ok = (cx > cy) == (immune::fitness(p, x) > immune::fitness(p, y));
        violations += !ok;
      }
    }
    CHECK(compared > 100);
    CHECK(violations == 0);
  }
}

TEST_SUITE("immune.params") {
  TEST_CASE("defaults resolve per problem size") {
    ImmuneParams p;
    CHECK(p.resolved_p_min(100) == doctest::Approx(0.01));
    CHECK(p.resolved_p_max(100) == doctest::Approx(0.05));
    CHECK(p.resolved_p_max(4) == doctest::Approx(0.5));
    CHECK(p.resolved_p_min(1) == doctest::Approx(0.5));
  }

  TEST_CASE("invariant violations are rejected") {
    auto bad = [](auto mutate) {
      ImmuneParams p;
      mutate(p);
      CHECK_THROWS_AS(p.validate(), InvalidArgument);
    };
    bad([](ImmuneParams& p) { p.pop_size = 1; });
    bad([](ImmuneParams& p) { p.select_frac = 0; });
    bad([](ImmuneParams& p) { p.select_frac = 1.5; });
    bad([](ImmuneParams& p) { p.p_min = 0.3, p.p_max = 0.2; });
    bad([](ImmuneParams& p) { p.p_max = 0.6; });
    bad([](ImmuneParams& p) { p.suppress_threshold = -0.1; });
    bad([](ImmuneParams& p) { p.newcomer_frac = 2; });
    ImmuneParams ok;
    CHECK_NOTHROW(ok.validate());
  }
}

TEST_SUITE("immune.init") {
  TEST_CASE("fixed seed reproduces the population") {
    auto p = abc();
    ImmuneParams params;
    Rng a(4), b(4);
    CHECK(immune::init_population(p, params, a) == immune::init_population(p, params, b));
  }

  TEST_CASE("greedy seed occupies slot 0") {
    Rng rng(1);
    auto p = oracle::random_set_instance(rng, 30, 80, 0.1);
    ImmuneParams params;
    auto pop = immune::init_population(p, params, rng);
    REQUIRE(pop.size() == params.pop_size);
    CHECK(pop[0].bits == immune::greedy_cover(p));
    for (const auto& a : pop) {
      CHECK(a.size == a.bits.count());
      CHECK(a.fitness == immune::fitness(p, a.bits));
      CHECK(a.covered == coverage::coverage_count(p, a.bits).covered);
    }
  }

  TEST_CASE("density 0 without greedy gives empty antibodies") {
    auto p = abc();
    ImmuneParams params;
    params.init_density = 0;
    params.seed_greedy = false;
    Rng rng(0);
    for (const auto& a : immune::init_population(p, params, rng)) {
      CHECK(a.bits.none());
      CHECK(a.fitness == doctest::Approx(1.0));
    }
  }

  TEST_CASE("no candidates with coverable demand is an error") {
    PlanProblem p = coverage::problem_from_rows(0, {});
    p.n_coverable = 1;  // hand-made inconsistent problem
    Rng rng(0);
    CHECK_THROWS_AS(immune::init_population(p, ImmuneParams{}, rng), InvalidArgument);
  }
}

TEST_SUITE("immune.step") {
  TEST_CASE("pure selection never degrades the population") {
    Rng rng(6);
    auto p = oracle::random_set_instance(rng, 25, 60, 0.12);
    ImmuneParams params;
    params.p_min = 0;
    params.p_max = 0;
    params.suppress_threshold = 0;
    params.newcomer_frac = 0;
    params.seed_greedy = false;
    params.init_density = 0.3;
    auto pop = immune::init_population(p, params, rng);
    auto elite = pop[0];
    for (int g = 0; g < 10; ++g) {
      std::vector<double> before;
      for (const auto& a : pop) before.push_back(a.fitness);
      std::sort(before.rbegin(), before.rend());
      auto [next, next_elite] = immune::step(p, params, pop, rng, elite);
      REQUIRE(next.size() == params.pop_size);
      std::vector<double> after;
      for (const auto& a : next) after.push_back(a.fitness);
      std::sort(after.rbegin(), after.rend());
      for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i] >= before[i]);
      pop = std::move(next);
      elite = std::move(next_elite);
    }
  }

  TEST_CASE("elite fitness never decreases and population size is stable") {
    Rng rng(7);
    auto p = oracle::random_set_instance(rng, 40, 100, 0.08);
    ImmuneParams params;
    params.seed_greedy = false;
    auto pop = immune::init_population(p, params, rng);
    auto elite = immune::make_antibody(p, coverage::prune_redundant(p, pop[0].bits));
    for (int g = 0; g < 40; ++g) {
      auto [next, next_elite] = immune::step(p, params, pop, rng, elite);
      CHECK(next.size() == params.pop_size);
      CHECK(next_elite.fitness >= elite.fitness);
      pop = std::move(next);
      elite = std::move(next_elite);
    }
  }

  TEST_CASE("suppression keeps survivors pairwise dissimilar") {
    Rng rng(8);
    auto p = oracle::random_set_instance(rng, 60, 100, 0.05);
    ImmuneParams params;
    params.newcomer_frac = 0;
    params.suppress_threshold = 0.05;
    auto pop = immune::init_population(p, params, rng);
    auto [next, elite] = immune::step(p, params, pop, rng, pop[0]);
    (void)elite;
    // Newcomers only fill shortfalls; check the leading survivors, which
    // all came through the suppression scan.
    std::size_t dissimilar_pairs_violated = 0;
    const std::size_t k = std::min<std::size_t>(10, next.size());
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const double d = static_cast<double>(hamming_distance(next[i].bits, next[j].bits)) / 60.0;
        dissimilar_pairs_violated += d < 0.05;
      }
    }
    CHECK(dissimilar_pairs_violated == 0);
  }
}

TEST_SUITE("immune.oracles") {
  TEST_CASE("brute force on A/B/C") {
    auto r = immune::brute_force_opt(abc());
    CHECK(r.opt_size == 1);
    CHECK(r.witness == sel("010"));
  }

  TEST_CASE("brute force ignores uncoverable demand") {
    auto p = coverage::problem_from_rows(5, {{0, 1}, {0, 1, 2, 3}, {2, 3}});
    CHECK(p.uncoverable() == std::vector<std::size_t>{4});
    auto r = immune::brute_force_opt(p);
    CHECK(r.opt_size == 1);
    CHECK(r.witness == sel("010"));
  }

  TEST_CASE("brute force on empty problem and over the limit") {
    auto r = immune::brute_force_opt(coverage::problem_from_rows(0, {}));
    CHECK(r.opt_size == 0);
    CHECK(r.witness.size() == 0);
    std::vector<std::vector<std::size_t>> rows(21, std::vector<std::size_t>{0});
    try {
      immune::brute_force_opt(coverage::problem_from_rows(1, rows));
      FAIL("expected refusal");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("oracle limit") != std::string::npos);
    }
  }

  TEST_CASE("brute force ties go to the lexicographically smallest cover") {
    // Both {0} and {1} cover; index 0 set is lexicographically larger.
    auto p = coverage::problem_from_rows(2, {{0, 1}, {0, 1}});
    CHECK(immune::brute_force_opt(p).witness == sel("01"));
  }

  TEST_CASE("brute force agrees with an independent enumerator") {
    Rng rng(41);
    for (int t = 0; t < 150; ++t) {
      auto p = oracle::random_set_instance(rng, 1 + rng.below(12), 1 + rng.below(40), 0.15);
      auto r = immune::brute_force_opt(p);
      auto o = oracle::min_cover(oracle::row_masks(p));
      CHECK(static_cast<int>(r.opt_size) == o.size);
      CHECK(coverage::coverage_count(p, r.witness).covered == p.n_coverable);
      CHECK(r.witness.count() == r.opt_size);
    }
  }

  TEST_CASE("greedy hand-simulated example") {
    auto p = coverage::problem_from_rows(4, {{0, 1, 2}, {2, 3}, {3}});
    CHECK(immune::greedy_cover(p) == sel("110"));
  }

  TEST_CASE("greedy on empty objective and identical rows") {
    CHECK(immune::greedy_cover(coverage::problem_from_rows(2, {{}, {}})) == sel("00"));
    CHECK(immune::greedy_cover(coverage::problem_from_rows(2, {{0, 1}, {0, 1}})) == sel("10"));
  }

  TEST_CASE("greedy respects the ln M' + 1 bound") {
    Rng rng(43);
    for (int t = 0; t < 200; ++t) {
      auto p = oracle::random_set_instance(rng, 3 + rng.below(13), 5 + rng.below(36), 0.2);
      if (p.n_coverable == 0) continue;
      const auto g = immune::greedy_cover(p);
      CHECK(coverage::coverage_count(p, g).covered == p.n_coverable);
      const double bound =
          (std::log(static_cast<double>(p.n_coverable)) + 1.0) * immune::brute_force_opt(p).opt_size;
      CHECK(static_cast<double>(g.count()) <= bound);
    }
  }
}

TEST_SUITE("immune.run") {
  TEST_CASE("A/B/C instance selects B") {
    auto r = immune::run(abc(), ImmuneParams{}, 0);
    CHECK(r.selected == std::vector<std::size_t>{1});
    CHECK(r.cov == 1.0);
    CHECK(r.covered == 4);
    CHECK(r.generations_run == r.trace.size());
    CHECK(r.seed == 0);
  }

  TEST_CASE("elite reaches the brute-force optimum on A/B/C") {
    auto p = abc();
    const double target = immune::fitness(p, immune::brute_force_opt(p).witness);
    ImmuneParams params;
    params.seed_greedy = false;
    auto r = immune::run(p, params, 0);
    REQUIRE(!r.trace.empty());
    CHECK(r.trace.back().best_fitness == doctest::Approx(target));
    CHECK(r.generations_run <= 300);
  }

  TEST_CASE("M' = 0 returns the empty selection at once") {
    auto p = coverage::problem_from_rows(3, {{}, {}});
    auto r = immune::run(p, ImmuneParams{}, 5);
    CHECK(r.selected.empty());
    CHECK(r.cov == 1.0);
    CHECK(r.generations_run <= 1);
    CHECK(r.uncoverable == std::vector<std::size_t>{0, 1, 2});
  }

  TEST_CASE("deterministic given problem, params and seed") {
    Rng rng(3);
    auto p = oracle::random_set_instance(rng, 50, 150, 0.06);
    auto a = immune::run(p, ImmuneParams{}, 123);
    auto b = immune::run(p, ImmuneParams{}, 123);
    CHECK(a.same_outcome(b));
  }

  TEST_CASE("progress callback fires per generation and failures are contained") {
    Rng rng(4);
    auto p = oracle::random_set_instance(rng, 30, 90, 0.08);
    std::vector<std::size_t> gens;
    auto r = immune::run(p, ImmuneParams{}, 9, [&](std::size_t g, double cov, std::size_t) {
      gens.push_back(g);
      CHECK(cov >= 0.0);
      if (g == 2) throw std::runtime_error("observer failure");
    });
    CHECK(gens.size() == r.generations_run);
    for (std::size_t i = 0; i < gens.size(); ++i) CHECK(gens[i] == i + 1);
    CHECK(r.cov == 1.0);
  }

  TEST_CASE("stop request ends the run between generations") {
    Rng rng(5);
    auto p = oracle::random_set_instance(rng, 40, 100, 0.05);
    std::stop_source src;
    ImmuneParams params;
    params.stall_limit = 1000;
    auto r = immune::run(
        p, params, 1, [&](std::size_t g, double, std::size_t) {
          if (g == 3) src.request_stop();
        },
        src.get_token());
    CHECK(r.cancelled);
    CHECK(r.generations_run == 3);
  }

  TEST_CASE("trace invariants and result consistency on random instances") {
    Rng rng(77);
    for (int t = 0; t < 40; ++t) {
      auto p = oracle::random_set_instance(rng, 5 + rng.below(60), 5 + rng.below(150), 0.07);
      auto r = immune::run(p, ImmuneParams{}, static_cast<std::uint64_t>(t));
      CHECK(std::is_sorted(r.selected.begin(), r.selected.end()));
      for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(r.trace[i].best_fitness >= r.trace[i - 1].best_fitness);
      }
      const auto bits = BitVec::from_indices(p.n_candidates(), r.selected);
      const auto st = coverage::coverage_count(p, bits);
      CHECK(st.covered == r.covered);
      CHECK(st.cov == r.cov);
      if (r.cov == 1.0) CHECK(st.covered == p.n_coverable);
      // Elite is always pruned: 1-minimal.
      CHECK(coverage::prune_redundant(p, bits) == bits);
    }
  }
}
