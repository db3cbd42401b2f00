#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "poleplan/coverage.hpp"
#include "poleplan/geo.hpp"
#include "poleplan/immune.hpp"
#include "poleplan/ingest.hpp"

namespace poleplan {

// Everything a plan run needs besides the detections. Shared by the CLI
// config file and the service request body.
struct PlanSettings {
  std::optional<geo::BBoxLTRD> bbox;
  double radius_m = coverage::kDefaultRadiusM;
  double grid_spacing_m = coverage::kDefaultGridSpacingM;
  double r_merge_m = ingest::kDefaultMergeRadiusM;
  std::vector<geo::Polygon> exclusions;
  immune::ImmuneParams immune;
  std::uint64_t seed = 0;

  // Range checks on the scalar fields and the immune parameters.
  void validate() const;
};

// Strict JSON config: unknown keys are rejected. Missing keys keep the
// values already present in `base`.
//
//   {"bbox": {"lt": {"lat": .., "lon": ..}, "rd": {...}},
//    "radius_m": 150, "grid_spacing_m": 50, "r_merge_m": 5,
//    "exclusions": <see ingest::parse_exclusion_zones>,
//    "immune": {"pop_size": 50, ...}, "seed": 42}
PlanSettings settings_from_json(std::string_view text, PlanSettings base = {});

// "lt_lat,lt_lon,rd_lat,rd_lon".
geo::BBoxLTRD parse_bbox_flag(std::string_view text);

}  // namespace poleplan
