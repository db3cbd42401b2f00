#include "poleplan/plan_request.hpp"

#include "json.hpp"
#include "settings_json.hpp"

namespace poleplan::service {
namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw RequestRejected(400, msg); }

double number_field(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) bad(std::string("scenario.") + key + " must be a number");
  return obj[key].get<double>();
}

ScenarioSpec scenario_from(const json& j) {
  if (!j.is_object()) bad("scenario must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "seed" && key != "n_poles" && key != "dup_rate" && key != "jitter_m") {
      bad("unknown key '" + key + "' in scenario");
    }
  }
  ScenarioSpec s;
  if (!j.contains("n_poles") || !j["n_poles"].is_number_unsigned()) {
    bad("scenario.n_poles must be a non-negative integer");
  }
  s.n_poles = j["n_poles"].get<std::size_t>();
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad("scenario.seed must be a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  s.dup_rate = number_field(j, "dup_rate", 0.0);
  s.jitter_m = number_field(j, "jitter_m", 0.0);
  if (!(s.dup_rate >= 0.0) || !(s.jitter_m >= 0.0)) {
    bad("scenario.dup_rate and scenario.jitter_m must be non-negative");
  }
  if (s.n_poles > 100'000) bad("scenario.n_poles exceeds 100000");
  return s;
}

std::vector<ingest::DetectionRecord> detections_from(const json& arr) {
  if (!arr.is_array()) bad("detections must be an array");
  std::vector<ingest::DetectionRecord> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& d = arr[i];
    const std::string where = "detections[" + std::to_string(i) + "]";
    if (!d.is_object()) bad(where + " must be an object");
    for (const auto& [key, _] : d.items()) {
      if (key != "lat" && key != "lon" && key != "confidence" && key != "source_id") {
        bad("unknown key '" + key + "' in " + where);
      }
    }
    if (!d.contains("lat") || !d["lat"].is_number() || !d.contains("lon") ||
        !d["lon"].is_number() || !d.contains("confidence") || !d["confidence"].is_number()) {
      bad(where + " needs numeric lat, lon and confidence");
    }
    std::string source;
    if (d.contains("source_id")) {
      if (!d["source_id"].is_string()) bad(where + ".source_id must be a string");
      source = d["source_id"].get<std::string>();
    }
    try {
      out.emplace_back(geo::GeoPoint(d["lat"].get<double>(), d["lon"].get<double>()),
                       d["confidence"].get<double>(), std::move(source));
    } catch (const InvalidArgument& e) {
      bad(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<ingest::DetectionRecord> PlanRequest::detections() const {
  if (const auto* d = std::get_if<std::vector<ingest::DetectionRecord>>(&source)) return *d;
  const auto& s = std::get<ScenarioSpec>(source);
  return ingest::synth_scenario(s.seed, *settings.bbox, s.n_poles, s.dup_rate, s.jitter_m);
}

PlanRequest parse_plan_request(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    bad(std::string("request body is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("request body must be a JSON object");

  PlanRequest req;
  try {
    detail::apply_settings(doc, req.settings, {"detections", "scenario"});
  } catch (const InvalidArgument& e) {
    bad(e.what());
  }
  if (!req.settings.bbox) bad("bbox is required");

  const geo::BBoxLTRD& bbox = *req.settings.bbox;
  const double rows = bbox.extent_north_south_m() / req.settings.grid_spacing_m;
  const double cols = bbox.extent_west_east_m() / req.settings.grid_spacing_m;
  if ((rows + 1.0) * (cols + 1.0) > static_cast<double>(kMaxDemandPoints)) {
    bad("demand grid too large; increase grid_spacing_m or shrink the bbox");
  }

  const bool has_det = doc.contains("detections");
  const bool has_scn = doc.contains("scenario");
  if (has_det == has_scn) {
    throw RequestRejected(422, "exactly one of 'detections' or 'scenario' must be given");
  }
  if (has_det) {
    req.source = detections_from(doc["detections"]);
  } else {
    req.source = scenario_from(doc["scenario"]);
  }
  return req;
}

}  // namespace poleplan::service
