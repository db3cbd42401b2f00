#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "poleplan/bitvec.hpp"
#include "poleplan/geo.hpp"
#include "poleplan/ingest.hpp"

namespace poleplan::coverage {

inline constexpr double kDefaultRadiusM = 150.0;
inline constexpr double kDefaultGridSpacingM = 50.0;

struct DemandGrid {
  std::vector<geo::GeoPoint> points;
  double spacing_m = 0.0;
  // Bit m set iff some candidate covers demand point m. All zero until
  // build_problem fills it.
  BitVec coverable_mask;
};

// One packed row per candidate: bit m set iff the candidate lies within
// the coverage radius of demand point m. Each row also records the range
// of words that can be non-zero so unions skip the empty tail.
class CoverageMatrix {
 public:
  struct WordSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  CoverageMatrix() = default;
  CoverageMatrix(std::size_t n_demand, std::vector<BitVec> rows);

  std::size_t n_candidates() const noexcept { return rows_.size(); }
  std::size_t n_demand() const noexcept { return n_demand_; }
  std::size_t n_words() const noexcept { return (n_demand_ + 63) / 64; }

  const BitVec& row(std::size_t n) const { return rows_[n]; }
  WordSpan span(std::size_t n) const { return spans_[n]; }
  bool covers(std::size_t n, std::size_t m) const { return rows_[n].test(m); }

 private:
  std::size_t n_demand_ = 0;
  std::vector<BitVec> rows_;
  std::vector<WordSpan> spans_;
};

struct PlanProblem {
  std::vector<ingest::PoleCandidate> candidates;
  DemandGrid demand;
  CoverageMatrix matrix;
  double radius_m = 0.0;
  std::size_t n_coverable = 0;  // M'

  std::size_t n_candidates() const noexcept { return matrix.n_candidates(); }
  std::size_t n_demand() const noexcept { return matrix.n_demand(); }
  std::vector<std::size_t> uncoverable() const;
};

struct CoverageStats {
  std::size_t covered = 0;
  double cov = 0.0;
};

DemandGrid build_demand_grid(const geo::BBoxLTRD& bbox, double spacing_m,
                             std::span<const geo::Polygon> zones);

// Coverage is boundary inclusive (distance <= radius_m). Throws Infeasible
// when there are no candidates but at least one demand point.
PlanProblem build_problem(std::vector<ingest::PoleCandidate> candidates,
                          const geo::BBoxLTRD& bbox, double radius_m, double spacing_m,
                          std::span<const geo::Polygon> zones);
PlanProblem build_problem(std::vector<ingest::PoleCandidate> candidates, DemandGrid demand,
                          double radius_m);

// Abstract set-cover instance: rows[n] lists the demand indices candidate n
// covers. Candidates get placeholder coordinates.
PlanProblem problem_from_rows(std::size_t n_demand,
                              const std::vector<std::vector<std::size_t>>& rows);

CoverageStats coverage_count(const PlanProblem& problem, const BitVec& selection);

// Reusable scratch for repeated coverage evaluation. One instance per
// thread.
class CoverageEvaluator {
 public:
  explicit CoverageEvaluator(const PlanProblem& problem);

  std::size_t covered(const BitVec& selection);
  // Union of the selected rows; valid until the next call.
  std::span<const BitVec::Word> union_words(const BitVec& selection);

 private:
  const PlanProblem* problem_;
  std::vector<BitVec::Word> acc_;
};

// Repeatedly drops the selected candidate with the fewest uniquely-covered
// demand points among those whose removal keeps coverage intact (ties by
// lowest id) until the selection is 1-minimal.
BitVec prune_redundant(const PlanProblem& problem, const BitVec& selection);

}  // namespace poleplan::coverage
