#pragma once

#include <cstddef>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "poleplan/coverage.hpp"
#include "poleplan/immune.hpp"
#include "poleplan/ingest.hpp"
#include "poleplan/settings.hpp"

namespace poleplan {

struct PlanOutcome {
  std::size_t detection_count = 0;
  std::vector<ingest::PoleCandidate> dropped;  // inside an exclusion zone
  coverage::PlanProblem problem;
  immune::PlanResult result;
  double build_seconds = 0.0;
  double optimize_seconds = 0.0;
};

// dedup_merge -> apply_exclusions -> build_problem -> immune::run.
// Requires settings.bbox; throws Infeasible when no candidate survives but
// demand remains.
PlanOutcome run_pipeline(std::span<const ingest::DetectionRecord> detections,
                         const PlanSettings& settings,
                         const immune::ProgressCallback& progress = {},
                         std::stop_token stop = {});

// Result GeoJSON. Point features carry `role`:
//   "candidate" (drawn red), "selected" (green), "uncovered" (amber demand
//   points no candidate can reach) and "excluded" (candidates dropped by an
//   exclusion zone). A top-level `summary` member holds the run statistics.
// Output is a pure function of the outcome, so identical runs give
// identical bytes.
std::string plan_to_geojson(const PlanOutcome& outcome, const PlanSettings& settings);

struct PlanSummary {
  std::size_t selected_count = 0;
  double coverage = 0.0;
  std::size_t generations = 0;
  std::uint64_t seed = 0;
  std::size_t candidate_count = 0;
  std::size_t excluded_count = 0;
  std::size_t uncovered_count = 0;
};

struct ParsedPlan {
  PlanSummary summary;
  std::vector<ingest::PoleCandidate> candidates;
  std::vector<std::size_t> selected;
  std::vector<geo::GeoPoint> uncovered;
  std::vector<ingest::PoleCandidate> excluded;
};

ParsedPlan parse_plan_geojson(std::string_view text);

}  // namespace poleplan
