#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stop_token>
#include <utility>
#include <vector>

#include "poleplan/bitvec.hpp"
#include "poleplan/coverage.hpp"
#include "poleplan/rng.hpp"

namespace poleplan::immune {

inline constexpr std::size_t kBruteForceLimit = 20;

// Optimizer knobs. p_min / p_max left unset resolve to 1/N and
// min(5/N, 0.5) for the problem at hand.
struct ImmuneParams {
  std::size_t pop_size = 50;
  std::size_t max_generations = 300;
  std::size_t stall_limit = 50;
  double select_frac = 0.2;
  double clone_beta = 1.0;
  std::optional<double> p_min;
  std::optional<double> p_max;
  double suppress_threshold = 0.05;
  double newcomer_frac = 0.1;
  double init_density = 0.1;
  bool seed_greedy = true;

  // Throws InvalidArgument naming the first violated bound.
  void validate() const;
  double resolved_p_min(std::size_t n_candidates) const;
  double resolved_p_max(std::size_t n_candidates) const;
};

struct Antibody {
  BitVec bits;
  double fitness = 0.0;
  std::size_t covered = 0;
  std::size_t size = 0;

  friend bool operator==(const Antibody&, const Antibody&) = default;
};

struct TraceEntry {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double best_cov = 0.0;
  std::size_t best_size = 0;
  double elapsed_s = 0.0;  // wall time of this generation; not deterministic

  // Compares the deterministic fields only.
  bool same_outcome(const TraceEntry& o) const noexcept {
    return generation == o.generation && best_fitness == o.best_fitness &&
           best_cov == o.best_cov && best_size == o.best_size;
  }
};

struct PlanResult {
  std::vector<std::size_t> selected;  // ascending candidate ids
  std::size_t covered = 0;
  double cov = 0.0;
  std::vector<std::size_t> uncoverable;
  std::size_t generations_run = 0;
  std::vector<TraceEntry> trace;
  std::uint64_t seed = 0;
  bool cancelled = false;

  // Everything except trace timings.
  bool same_outcome(const PlanResult& o) const noexcept;
};

// Invoked once per generation with the elite's coverage and size.
using ProgressCallback =
    std::function<void(std::size_t generation, double best_cov, std::size_t best_size)>;

// (M' + 1) * cov + (1 - size / N). Any gain in coverage outweighs every
// possible difference in pole count.
double fitness(const coverage::PlanProblem& problem, const BitVec& bits);

// Strict weak order: higher fitness, then fewer poles, then lex-smaller bits.
bool better(const Antibody& a, const Antibody& b) noexcept;

// Evaluates fitness and fills the caches of `bits`.
Antibody make_antibody(const coverage::PlanProblem& problem, BitVec bits);

std::vector<Antibody> init_population(const coverage::PlanProblem& problem,
                                      const ImmuneParams& params, Rng& rng);

// One generation: select, clone, hypermutate, suppress, refresh, and
// update the elite with the pruned generation best.
std::pair<std::vector<Antibody>, Antibody> step(const coverage::PlanProblem& problem,
                                                const ImmuneParams& params,
                                                std::vector<Antibody> population, Rng& rng,
                                                const Antibody& elite);

// Runs until max_generations, stall_limit generations without an elite
// fitness gain, or a stop request (checked between generations).
PlanResult run(const coverage::PlanProblem& problem, const ImmuneParams& params,
               std::uint64_t seed, const ProgressCallback& progress = {},
               std::stop_token stop = {});

struct BruteForceResult {
  std::size_t opt_size = 0;
  BitVec witness;
};

// Exhaustive search by ascending cardinality; ties go to the
// lexicographically smallest selection. Refuses N > kBruteForceLimit.
BruteForceResult brute_force_opt(const coverage::PlanProblem& problem);

// Classical greedy: repeatedly take the candidate covering the most
// still-uncovered demand, ties by lowest id.
BitVec greedy_cover(const coverage::PlanProblem& problem);

}  // namespace poleplan::immune
