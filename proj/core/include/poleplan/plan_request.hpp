#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "poleplan/error.hpp"
#include "poleplan/ingest.hpp"
#include "poleplan/settings.hpp"

namespace poleplan::service {

struct ScenarioSpec {
  std::uint64_t seed = 0;
  std::size_t n_poles = 0;
  double dup_rate = 0.0;
  double jitter_m = 0.0;
};

// Body of POST /api/plans: settings keys plus exactly one of `detections`
// (array of {lat, lon, confidence, source_id?}) or `scenario`.
struct PlanRequest {
  PlanSettings settings;  // bbox always set
  std::variant<std::vector<ingest::DetectionRecord>, ScenarioSpec> source;

  std::vector<ingest::DetectionRecord> detections() const;
};

// Carries the HTTP status the rejection maps to (400 or 422).
class RequestRejected : public Error {
 public:
  RequestRejected(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

// Upper bound on demand points per request; larger grids are rejected
// up front instead of exhausting memory in a worker.
inline constexpr std::size_t kMaxDemandPoints = 2'000'000;

PlanRequest parse_plan_request(std::string_view body);

}  // namespace poleplan::service
