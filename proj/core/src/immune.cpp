#include "poleplan/immune.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

#include "poleplan/error.hpp"

namespace poleplan::immune {
namespace {

using coverage::PlanProblem;

std::size_t ceil_to_size(double x) {
  return x <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(x - 1e-12));
}

double normalized_hamming(const BitVec& a, const BitVec& b) {
  return a.size() == 0 ? 0.0
                       : static_cast<double>(hamming_distance(a, b)) /
                             static_cast<double>(a.size());
}

BitVec random_bits(std::size_t n, double density, Rng& rng) {
  BitVec b(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(density)) b.set(i);
  }
  return b;
}

// Independent per-bit flips with probability p, drawn by skipping ahead a
// geometric number of positions instead of one draw per bit.
void hypermutate(BitVec& bits, double p, Rng& rng) {
  const std::size_t n = bits.size();
  if (p <= 0.0 || n == 0) return;
  if (p >= 1.0) {
    for (std::size_t i = 0; i < n; ++i) bits.flip(i);
    return;
  }
  const double log_q = std::log1p(-p);
  double pos = -1.0;
  for (;;) {
    const double u = rng.uniform();
    pos += 1.0 + std::floor(std::log1p(-u) / log_q);
    if (pos >= static_cast<double>(n)) break;
    bits.flip(static_cast<std::size_t>(pos));
  }
}

class FitnessEvaluator {
 public:
  explicit FitnessEvaluator(const PlanProblem& problem) : problem_(problem), cover_(problem) {}

  Antibody evaluate(BitVec bits) {
    Antibody a;
    a.covered = cover_.covered(bits);
    a.size = bits.count();
    a.fitness = score(a.covered, a.size);
    a.bits = std::move(bits);
    return a;
  }

  double score(std::size_t covered, std::size_t size) const {
    const double m = static_cast<double>(problem_.n_coverable);
    const double n = static_cast<double>(problem_.n_candidates());
    const double cov = problem_.n_coverable == 0 ? 1.0 : static_cast<double>(covered) / m;
    const double size_term = problem_.n_candidates() == 0 ? 1.0 : 1.0 - static_cast<double>(size) / n;
    return (m + 1.0) * cov + size_term;
  }

 private:
  const PlanProblem& problem_;
  coverage::CoverageEvaluator cover_;
};

const Antibody& best_of(const std::vector<Antibody>& pop) {
  return *std::min_element(pop.begin(), pop.end(), better);
}

}  // namespace

void ImmuneParams::validate() const {
  if (pop_size < 2) throw InvalidArgument("pop_size must be at least 2");
  if (!(select_frac > 0.0 && select_frac <= 1.0)) {
    throw InvalidArgument("select_frac must be in (0, 1]");
  }
  if (!(clone_beta > 0.0) || !std::isfinite(clone_beta)) {
    throw InvalidArgument("clone_beta must be positive");
  }
  const double lo = p_min.value_or(0.0);
  const double hi = p_max.value_or(0.5);
  if (!(lo >= 0.0 && lo <= 0.5)) throw InvalidArgument("p_min must be in [0, 0.5]");
  if (!(hi >= 0.0 && hi <= 0.5)) throw InvalidArgument("p_max must be in [0, 0.5]");
  if (p_min && p_max && lo > hi) throw InvalidArgument("p_min must not exceed p_max");
  if (!(suppress_threshold >= 0.0 && suppress_threshold <= 1.0)) {
    throw InvalidArgument("suppress_threshold must be in [0, 1]");
  }
  if (!(newcomer_frac >= 0.0 && newcomer_frac <= 1.0)) {
    throw InvalidArgument("newcomer_frac must be in [0, 1]");
  }
  if (!(init_density >= 0.0 && init_density <= 1.0)) {
    throw InvalidArgument("init_density must be in [0, 1]");
  }
}

double ImmuneParams::resolved_p_min(std::size_t n_candidates) const {
  if (p_min) return *p_min;
  const double d = n_candidates == 0 ? 0.0 : 1.0 / static_cast<double>(n_candidates);
  return std::min({d, 0.5, resolved_p_max(n_candidates)});
}

double ImmuneParams::resolved_p_max(std::size_t n_candidates) const {
  if (p_max) return *p_max;
  const double d =
      n_candidates == 0 ? 0.0 : std::min(5.0 / static_cast<double>(n_candidates), 0.5);
  return p_min ? std::max(d, *p_min) : d;
}

bool PlanResult::same_outcome(const PlanResult& o) const noexcept {
  if (selected != o.selected || covered != o.covered || cov != o.cov ||
      uncoverable != o.uncoverable || generations_run != o.generations_run ||
      seed != o.seed || cancelled != o.cancelled || trace.size() != o.trace.size()) {
    return false;
  }
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (!trace[i].same_outcome(o.trace[i])) return false;
  }
  return true;
}

double fitness(const PlanProblem& problem, const BitVec& bits) {
  const coverage::CoverageStats s = coverage::coverage_count(problem, bits);
  return FitnessEvaluator(problem).score(s.covered, bits.count());
}

bool better(const Antibody& a, const Antibody& b) noexcept {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  if (a.size != b.size) return a.size < b.size;
  return lex_less(a.bits, b.bits);
}

Antibody make_antibody(const PlanProblem& problem, BitVec bits) {
  if (bits.size() != problem.n_candidates()) {
    throw InvalidArgument("antibody length does not match candidate count");
  }
  return FitnessEvaluator(problem).evaluate(std::move(bits));
}

std::vector<Antibody> init_population(const PlanProblem& problem, const ImmuneParams& params,
                                      Rng& rng) {
  params.validate();
  const std::size_t n = problem.n_candidates();
  if (n == 0 && problem.n_coverable > 0) {
    throw InvalidArgument("cannot build a population without candidates");
  }
  FitnessEvaluator eval(problem);
  std::vector<Antibody> pop;
  pop.reserve(params.pop_size);
  for (std::size_t i = 0; i < params.pop_size; ++i) {
    pop.push_back(eval.evaluate(random_bits(n, params.init_density, rng)));
  }
  if (params.seed_greedy) pop[0] = eval.evaluate(greedy_cover(problem));
  return pop;
}

std::pair<std::vector<Antibody>, Antibody> step(const PlanProblem& problem,
                                                const ImmuneParams& params,
                                                std::vector<Antibody> population, Rng& rng,
                                                const Antibody& elite) {
  if (population.empty()) throw InvalidArgument("population must not be empty");
  const std::size_t n = problem.n_candidates();
  const std::size_t pop_size = params.pop_size;
  FitnessEvaluator eval(problem);

  // Selection.
  std::sort(population.begin(), population.end(), better);
  const std::size_t s =
      std::clamp<std::size_t>(ceil_to_size(params.select_frac * static_cast<double>(pop_size)),
                              1, population.size());

  // Cloning and rank-scaled hypermutation; parents pass through unchanged.
  const double p_lo = params.resolved_p_min(n);
  const double p_hi = params.resolved_p_max(n);
  const std::size_t clone_cap = 5 * pop_size;
  std::vector<Antibody> pool(population.begin(), population.begin() + static_cast<std::ptrdiff_t>(s));
  std::size_t clones_made = 0;
  for (std::size_t rank = 1; rank <= s && clones_made < clone_cap; ++rank) {
    const Antibody& parent = population[rank - 1];
    const double nu = static_cast<double>(rank - 1) / static_cast<double>(std::max<std::size_t>(s - 1, 1));
    const double p = p_lo + (p_hi - p_lo) * nu;
    std::size_t copies =
        ceil_to_size(params.clone_beta * static_cast<double>(pop_size) / static_cast<double>(rank));
    copies = std::min(copies, clone_cap - clones_made);
    for (std::size_t c = 0; c < copies; ++c) {
      BitVec bits = parent.bits;
      hypermutate(bits, p, rng);
      pool.push_back(eval.evaluate(std::move(bits)));
    }
    clones_made += copies;
  }

  // Suppression: the fitter member of any near-duplicate pair survives.
  std::stable_sort(pool.begin(), pool.end(), better);
  std::vector<Antibody> kept;
  kept.reserve(pop_size);
  for (auto& a : pool) {
    const bool similar = std::any_of(kept.begin(), kept.end(), [&](const Antibody& k) {
      return normalized_hamming(a.bits, k.bits) < params.suppress_threshold;
    });
    if (!similar) kept.push_back(std::move(a));
  }

  // Refresh with newcomers. The best survivor is always retained, and
  // newcomers also fill any shortfall left by suppression.
  const std::size_t newcomers = std::min(
      ceil_to_size(params.newcomer_frac * static_cast<double>(pop_size)), pop_size - 1);
  if (kept.size() > pop_size - newcomers) kept.resize(pop_size - newcomers);
  while (kept.size() < pop_size) {
    kept.push_back(eval.evaluate(random_bits(n, params.init_density, rng)));
  }

  Antibody candidate = eval.evaluate(coverage::prune_redundant(problem, best_of(kept).bits));
  Antibody next_elite = better(candidate, elite) ? std::move(candidate) : elite;
  return {std::move(kept), std::move(next_elite)};
}

PlanResult run(const PlanProblem& problem, const ImmuneParams& params, std::uint64_t seed,
               const ProgressCallback& progress, std::stop_token stop) {
  params.validate();
  PlanResult result;
  result.seed = seed;
  result.uncoverable = problem.uncoverable();

  auto finish = [&](const BitVec& bits) {
    result.selected = bits.indices();
    const coverage::CoverageStats st = coverage::coverage_count(problem, bits);
    result.covered = st.covered;
    result.cov = st.cov;
    return result;
  };

  if (problem.n_coverable == 0) return finish(BitVec(problem.n_candidates()));

  Rng rng(seed);
  FitnessEvaluator eval(problem);
  std::vector<Antibody> population = init_population(problem, params, rng);
  Antibody elite = eval.evaluate(coverage::prune_redundant(problem, best_of(population).bits));

  std::size_t stall = 0;
  for (std::size_t gen = 1; gen <= params.max_generations; ++gen) {
    if (stop.stop_requested()) {
      result.cancelled = true;
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto [next_pop, next_elite] = step(problem, params, std::move(population), rng, elite);
    const bool improved = next_elite.fitness > elite.fitness;
    population = std::move(next_pop);
    elite = std::move(next_elite);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double cov = problem.n_coverable == 0
                           ? 1.0
                           : static_cast<double>(elite.covered) /
                                 static_cast<double>(problem.n_coverable);
    result.trace.push_back(TraceEntry{gen, elite.fitness, cov, elite.size, elapsed});
    result.generations_run = gen;
    if (progress) {
      try {
        progress(gen, cov, elite.size);
      } catch (...) {
        // A failing observer must not take the optimizer down with it.
      }
    }
    stall = improved ? 0 : stall + 1;
    if (stall >= params.stall_limit) break;
  }
  return finish(elite.bits);
}

BruteForceResult brute_force_opt(const PlanProblem& problem) {
  const std::size_t n = problem.n_candidates();
  if (n > kBruteForceLimit) {
    throw InvalidArgument("oracle limit: brute force refuses more than " +
                          std::to_string(kBruteForceLimit) + " candidates");
  }
  BruteForceResult r{0, BitVec(n)};
  if (problem.n_coverable == 0) return r;

  coverage::CoverageEvaluator eval(problem);
  for (std::size_t k = 1; k <= n; ++k) {
    std::optional<BitVec> best;
    // Gosper's hack walks every k-subset of n bits.
    std::uint64_t mask = (std::uint64_t{1} << k) - 1;
    const std::uint64_t limit = std::uint64_t{1} << n;
    while (mask < limit) {
      BitVec sel(n);
      for (std::uint64_t m = mask; m != 0; m &= m - 1) {
        sel.set(static_cast<std::size_t>(std::countr_zero(m)));
      }
      if (eval.covered(sel) == problem.n_coverable && (!best || lex_less(sel, *best))) {
        best = std::move(sel);
      }
      const std::uint64_t c = mask & (~mask + 1);
      const std::uint64_t rr = mask + c;
      mask = (((rr ^ mask) >> 2) / c) | rr;
    }
    if (best) {
      r.opt_size = k;
      r.witness = std::move(*best);
      return r;
    }
  }
  // Unreachable: the full selection always covers every coverable point.
  throw Error("brute force found no cover");
}

BitVec greedy_cover(const PlanProblem& problem) {
  const std::size_t n = problem.n_candidates();
  const auto& mx = problem.matrix;
  BitVec selection(n);
  BitVec uncovered = problem.demand.coverable_mask;
  auto uw = uncovered.words();
  for (;;) {
    std::size_t best = n;
    std::size_t best_gain = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (selection.test(c)) continue;
      const auto span = mx.span(c);
      auto rw = mx.row(c).words();
      std::size_t gain = 0;
      for (std::size_t k = span.begin; k < span.end; ++k) {
        gain += static_cast<std::size_t>(std::popcount(rw[k] & uw[k]));
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    if (best == n) break;
    selection.set(best);
    const auto span = mx.span(best);
    auto rw = mx.row(best).words();
    for (std::size_t k = span.begin; k < span.end; ++k) uw[k] &= ~rw[k];
  }
  return selection;
}

}  // namespace poleplan::immune
