#include "poleplan/pipeline.hpp"

#include <chrono>

#include "json.hpp"
#include "poleplan/error.hpp"

namespace poleplan {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr const char* kRed = "#d62728";
constexpr const char* kGreen = "#2ca02c";
constexpr const char* kAmber = "#ffb000";
constexpr const char* kGrey = "#7f7f7f";

ordered_json point_feature(const geo::GeoPoint& p, ordered_json props) {
  ordered_json f;
  f["type"] = "Feature";
  f["geometry"] = {{"type", "Point"}, {"coordinates", {p.lon(), p.lat()}}};
  f["properties"] = std::move(props);
  return f;
}

ordered_json candidate_props(const char* role, const char* color,
                             const ingest::PoleCandidate& c) {
  ordered_json p;
  p["role"] = role;
  p["id"] = c.id;
  p["confidence"] = c.confidence;
  p["support"] = c.support;
  p["marker-color"] = color;
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ingest::PoleCandidate candidate_from(const json& f, const std::string& where) {
  const json& c = f.at("geometry").at("coordinates");
  const json& p = f.at("properties");
  try {
    return ingest::PoleCandidate{p.at("id").get<std::size_t>(),
                                 geo::GeoPoint(c.at(1).get<double>(), c.at(0).get<double>()),
                                 p.at("confidence").get<double>(),
                                 p.at("support").get<std::size_t>()};
  } catch (const InvalidArgument& e) {
    throw FormatError(where, e.what());
  }
}

}  // namespace

PlanOutcome run_pipeline(std::span<const ingest::DetectionRecord> detections,
                         const PlanSettings& settings, const immune::ProgressCallback& progress,
                         std::stop_token stop) {
  settings.validate();
  if (!settings.bbox) throw InvalidArgument("a planning bbox is required");

  PlanOutcome out;
  out.detection_count = detections.size();

  const auto t0 = std::chrono::steady_clock::now();
  auto merged = ingest::dedup_merge(detections, settings.r_merge_m);
  auto filtered = ingest::apply_exclusions(merged, settings.exclusions);
  out.dropped = std::move(filtered.dropped);
  out.problem = coverage::build_problem(std::move(filtered.kept), *settings.bbox,
                                        settings.radius_m, settings.grid_spacing_m,
                                        settings.exclusions);
  out.build_seconds = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  out.result = immune::run(out.problem, settings.immune, settings.seed, progress, stop);
  out.optimize_seconds = seconds_since(t1);
  return out;
}

std::string plan_to_geojson(const PlanOutcome& outcome, const PlanSettings& settings) {
  const auto& problem = outcome.problem;
  const auto& result = outcome.result;

  ordered_json features = ordered_json::array();
  for (const auto& c : problem.candidates) {
    features.push_back(point_feature(c.point, candidate_props("candidate", kRed, c)));
  }
  for (std::size_t id : result.selected) {
    const auto& c = problem.candidates[id];
    features.push_back(point_feature(c.point, candidate_props("selected", kGreen, c)));
  }
  for (std::size_t m : result.uncoverable) {
    ordered_json p;
    p["role"] = "uncovered";
    p["demand_index"] = m;
    p["marker-color"] = kAmber;
    features.push_back(point_feature(problem.demand.points[m], std::move(p)));
  }
  for (const auto& c : outcome.dropped) {
    features.push_back(point_feature(c.point, candidate_props("excluded", kGrey, c)));
  }

  ordered_json summary;
  summary["selected_count"] = result.selected.size();
  summary["coverage"] = result.cov;
  summary["generations"] = result.generations_run;
  summary["seed"] = result.seed;
  summary["candidate_count"] = problem.candidates.size();
  summary["excluded_count"] = outcome.dropped.size();
  summary["detection_count"] = outcome.detection_count;
  summary["demand_count"] = problem.n_demand();
  summary["coverable_count"] = problem.n_coverable;
  summary["covered_count"] = result.covered;
  summary["uncovered_count"] = result.uncoverable.size();
  summary["radius_m"] = settings.radius_m;
  summary["grid_spacing_m"] = settings.grid_spacing_m;
  if (result.cancelled) summary["cancelled"] = true;

  ordered_json doc;
  doc["type"] = "FeatureCollection";
  if (settings.bbox) {
    doc["bbox"] = {settings.bbox->west(), settings.bbox->south(), settings.bbox->east(),
                   settings.bbox->north()};
  }
  doc["summary"] = std::move(summary);
  doc["features"] = std::move(features);
  return doc.dump(1) + "\n";
}

ParsedPlan parse_plan_geojson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("", std::string("invalid JSON: ") + e.what());
  }
  ParsedPlan out;
  try {
    if (doc.at("type") != "FeatureCollection") throw FormatError("", "not a FeatureCollection");
    const json& s = doc.at("summary");
    out.summary.selected_count = s.at("selected_count").get<std::size_t>();
    out.summary.coverage = s.at("coverage").get<double>();
    out.summary.generations = s.at("generations").get<std::size_t>();
    out.summary.seed = s.at("seed").get<std::uint64_t>();
    out.summary.candidate_count = s.value("candidate_count", std::size_t{0});
    out.summary.excluded_count = s.value("excluded_count", std::size_t{0});
    out.summary.uncovered_count = s.value("uncovered_count", std::size_t{0});
    const json& features = doc.at("features");
    for (std::size_t i = 0; i < features.size(); ++i) {
      const std::string where = "feature " + std::to_string(i);
      const json& f = features[i];
      const std::string role = f.at("properties").at("role").get<std::string>();
      if (role == "candidate") {
        out.candidates.push_back(candidate_from(f, where));
      } else if (role == "selected") {
        out.selected.push_back(f.at("properties").at("id").get<std::size_t>());
      } else if (role == "uncovered") {
        const json& c = f.at("geometry").at("coordinates");
        out.uncovered.emplace_back(c.at(1).get<double>(), c.at(0).get<double>());
      } else if (role == "excluded") {
        out.excluded.push_back(candidate_from(f, where));
      } else {
        throw FormatError(where, "unknown role '" + role + "'");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError("", std::string("malformed plan GeoJSON: ") + e.what());
  }
  return out;
}

}  // namespace poleplan
