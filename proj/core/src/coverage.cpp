#include "poleplan/coverage.hpp"

#include <algorithm>
#include <numeric>

#include "poleplan/error.hpp"

namespace poleplan::coverage {
namespace {

using Word = BitVec::Word;

void check_selection(const PlanProblem& problem, const BitVec& selection) {
  if (selection.size() != problem.n_candidates()) {
    throw InvalidArgument("selection length " + std::to_string(selection.size()) +
                          " does not match candidate count " +
                          std::to_string(problem.n_candidates()));
  }
}

}  // namespace

CoverageMatrix::CoverageMatrix(std::size_t n_demand, std::vector<BitVec> rows)
    : n_demand_(n_demand), rows_(std::move(rows)) {
  spans_.reserve(rows_.size());
  for (const BitVec& r : rows_) {
    if (r.size() != n_demand_) throw InvalidArgument("coverage row length mismatch");
    auto w = r.words();
    WordSpan s;
    auto first = std::find_if(w.begin(), w.end(), [](Word x) { return x != 0; });
    if (first != w.end()) {
      auto last = std::find_if(w.rbegin(), w.rend(), [](Word x) { return x != 0; });
      s.begin = static_cast<std::size_t>(first - w.begin());
      s.end = w.size() - static_cast<std::size_t>(last - w.rbegin());
    }
    spans_.push_back(s);
  }
}

std::vector<std::size_t> PlanProblem::uncoverable() const {
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < n_demand(); ++m) {
    if (!demand.coverable_mask.test(m)) out.push_back(m);
  }
  return out;
}

DemandGrid build_demand_grid(const geo::BBoxLTRD& bbox, double spacing_m,
                             std::span<const geo::Polygon> zones) {
  DemandGrid g;
  g.spacing_m = spacing_m;
  for (const auto& p : geo::grid_points(bbox, spacing_m)) {
    if (!geo::inside_any(p, zones)) g.points.push_back(p);
  }
  g.coverable_mask = BitVec(g.points.size());
  return g;
}

PlanProblem build_problem(std::vector<ingest::PoleCandidate> candidates,
                          const geo::BBoxLTRD& bbox, double radius_m, double spacing_m,
                          std::span<const geo::Polygon> zones) {
  return build_problem(std::move(candidates), build_demand_grid(bbox, spacing_m, zones),
                       radius_m);
}

PlanProblem build_problem(std::vector<ingest::PoleCandidate> candidates, DemandGrid demand,
                          double radius_m) {
  if (!(radius_m >= 0.0)) throw InvalidArgument("coverage radius must be non-negative");
  const std::size_t n_demand = demand.points.size();
  if (candidates.empty() && n_demand > 0) throw Infeasible("no candidates");

  // Demand sorted by latitude so each candidate only checks the band of
  // points whose meridian distance alone does not already exceed the
  // radius. Great-circle distance is never below R * |dphi|, so the band
  // is a superset of the true disc.
  std::vector<std::size_t> by_lat(n_demand);
  std::iota(by_lat.begin(), by_lat.end(), std::size_t{0});
  std::stable_sort(by_lat.begin(), by_lat.end(), [&](std::size_t a, std::size_t b) {
    return demand.points[a].lat() < demand.points[b].lat();
  });
  std::vector<double> lats(n_demand);
  for (std::size_t i = 0; i < n_demand; ++i) lats[i] = demand.points[by_lat[i]].lat();

  const double band_deg = radius_m / geo::meters_per_degree_lat() * (1.0 + 1e-9) + 1e-12;

  std::vector<BitVec> rows;
  rows.reserve(candidates.size());
  for (const auto& c : candidates) {
    BitVec row(n_demand);
    auto lo = std::lower_bound(lats.begin(), lats.end(), c.point.lat() - band_deg);
    auto hi = std::upper_bound(lats.begin(), lats.end(), c.point.lat() + band_deg);
    for (auto it = lo; it != hi; ++it) {
      const std::size_t m = by_lat[static_cast<std::size_t>(it - lats.begin())];
      if (geo::haversine_m(c.point, demand.points[m]) <= radius_m) row.set(m);
    }
    rows.push_back(std::move(row));
  }

  PlanProblem p;
  p.candidates = std::move(candidates);
  p.radius_m = radius_m;
  p.matrix = CoverageMatrix(n_demand, std::move(rows));
  demand.coverable_mask = BitVec(n_demand);
  for (std::size_t n = 0; n < p.matrix.n_candidates(); ++n) {
    demand.coverable_mask |= p.matrix.row(n);
  }
  p.n_coverable = demand.coverable_mask.count();
  p.demand = std::move(demand);
  return p;
}

PlanProblem problem_from_rows(std::size_t n_demand,
                              const std::vector<std::vector<std::size_t>>& rows) {
  PlanProblem p;
  std::vector<BitVec> bits;
  bits.reserve(rows.size());
  for (std::size_t n = 0; n < rows.size(); ++n) {
    bits.push_back(BitVec::from_indices(n_demand, rows[n]));
    p.candidates.push_back(ingest::PoleCandidate{n, geo::GeoPoint(0, 0), 1.0, 1});
  }
  p.matrix = CoverageMatrix(n_demand, std::move(bits));
  p.demand.points.assign(n_demand, geo::GeoPoint(0, 0));
  p.demand.coverable_mask = BitVec(n_demand);
  for (std::size_t n = 0; n < p.matrix.n_candidates(); ++n) {
    p.demand.coverable_mask |= p.matrix.row(n);
  }
  p.n_coverable = p.demand.coverable_mask.count();
  return p;
}

CoverageEvaluator::CoverageEvaluator(const PlanProblem& problem)
    : problem_(&problem), acc_(problem.matrix.n_words(), 0) {}

std::span<const BitVec::Word> CoverageEvaluator::union_words(const BitVec& selection) {
  std::fill(acc_.begin(), acc_.end(), Word{0});
  const CoverageMatrix& mx = problem_->matrix;
  auto sw = selection.words();
  for (std::size_t wi = 0; wi < sw.size(); ++wi) {
    Word w = sw[wi];
    while (w != 0) {
      const std::size_t n = wi * BitVec::kWordBits + static_cast<std::size_t>(std::countr_zero(w));
      w &= w - 1;
      const auto span = mx.span(n);
      auto rw = mx.row(n).words();
      for (std::size_t k = span.begin; k < span.end; ++k) acc_[k] |= rw[k];
    }
  }
  return acc_;
}

std::size_t CoverageEvaluator::covered(const BitVec& selection) {
  auto u = union_words(selection);
  auto mask = problem_->demand.coverable_mask.words();
  std::size_t c = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    c += static_cast<std::size_t>(std::popcount(u[k] & mask[k]));
  }
  return c;
}

CoverageStats coverage_count(const PlanProblem& problem, const BitVec& selection) {
  check_selection(problem, selection);
  CoverageEvaluator eval(problem);
  CoverageStats s;
  s.covered = eval.covered(selection);
  s.cov = problem.n_coverable == 0
              ? 1.0
              : static_cast<double>(s.covered) / static_cast<double>(problem.n_coverable);
  return s;
}

BitVec prune_redundant(const PlanProblem& problem, const BitVec& selection) {
  check_selection(problem, selection);
  const CoverageMatrix& mx = problem.matrix;
  auto mask = problem.demand.coverable_mask.words();
  BitVec sel = selection;
  std::vector<Word> once(mx.n_words());
  std::vector<Word> twice(mx.n_words());

  for (;;) {
    // Bit-sliced saturating counter: once = covered >= 1, twice = >= 2.
    std::fill(once.begin(), once.end(), Word{0});
    std::fill(twice.begin(), twice.end(), Word{0});
    const std::vector<std::size_t> chosen = sel.indices();
    for (std::size_t n : chosen) {
      const auto span = mx.span(n);
      auto rw = mx.row(n).words();
      for (std::size_t k = span.begin; k < span.end; ++k) {
        const Word r = rw[k] & mask[k];
        twice[k] |= once[k] & r;
        once[k] |= r;
      }
    }

    std::size_t best = chosen.size();
    std::size_t best_unique = SIZE_MAX;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const std::size_t n = chosen[i];
      const auto span = mx.span(n);
      auto rw = mx.row(n).words();
      std::size_t unique = 0;
      for (std::size_t k = span.begin; k < span.end; ++k) {
        unique += static_cast<std::size_t>(std::popcount(rw[k] & mask[k] & once[k] & ~twice[k]));
      }
      // Only a zero-unique candidate can go without losing coverage.
      if (unique == 0 && unique < best_unique) {
        best_unique = unique;
        best = i;
      }
    }
    if (best == chosen.size()) break;
    sel.set(chosen[best], false);
  }
  return sel;
}

}  // namespace poleplan::coverage
