#include "poleplan/settings.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "poleplan/error.hpp"
#include "settings_json.hpp"
#include "text_format.hpp"

namespace poleplan {
namespace detail {
namespace {

using json = nlohmann::json;

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                  std::string_view context) {
  if (!obj.is_object()) throw InvalidArgument(std::string(context) + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidArgument("unknown key '" + key + "' in " + std::string(context));
    }
  }
}

double number(const json& j, std::string_view key) {
  if (!j.is_number()) throw InvalidArgument(std::string(key) + " must be a number");
  return j.get<double>();
}

std::size_t count(const json& j, std::string_view key) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    throw InvalidArgument(std::string(key) + " must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

geo::GeoPoint point(const json& j, std::string_view context) {
  require_keys(j, {"lat", "lon"}, context);
  if (!j.contains("lat") || !j.contains("lon")) {
    throw InvalidArgument(std::string(context) + " needs lat and lon");
  }
  return geo::GeoPoint(number(j["lat"], "lat"), number(j["lon"], "lon"));
}

}  // namespace

geo::BBoxLTRD bbox_from_json(const json& j) {
  require_keys(j, {"lt", "rd"}, "bbox");
  if (!j.contains("lt") || !j.contains("rd")) throw InvalidArgument("bbox needs lt and rd");
  return geo::BBoxLTRD(point(j["lt"], "bbox.lt"), point(j["rd"], "bbox.rd"));
}

immune::ImmuneParams immune_from_json(const json& j, immune::ImmuneParams p) {
  require_keys(j,
               {"pop_size", "max_generations", "stall_limit", "select_frac", "clone_beta",
                "p_min", "p_max", "suppress_threshold", "newcomer_frac", "init_density",
                "seed_greedy"},
               "immune");
  if (j.contains("pop_size")) p.pop_size = count(j["pop_size"], "pop_size");
  if (j.contains("max_generations")) {
    p.max_generations = count(j["max_generations"], "max_generations");
  }
  if (j.contains("stall_limit")) p.stall_limit = count(j["stall_limit"], "stall_limit");
  if (j.contains("select_frac")) p.select_frac = number(j["select_frac"], "select_frac");
  if (j.contains("clone_beta")) p.clone_beta = number(j["clone_beta"], "clone_beta");
  if (j.contains("p_min")) p.p_min = number(j["p_min"], "p_min");
  if (j.contains("p_max")) p.p_max = number(j["p_max"], "p_max");
  if (j.contains("suppress_threshold")) {
    p.suppress_threshold = number(j["suppress_threshold"], "suppress_threshold");
  }
  if (j.contains("newcomer_frac")) p.newcomer_frac = number(j["newcomer_frac"], "newcomer_frac");
  if (j.contains("init_density")) p.init_density = number(j["init_density"], "init_density");
  if (j.contains("seed_greedy")) {
    if (!j["seed_greedy"].is_boolean()) throw InvalidArgument("seed_greedy must be a boolean");
    p.seed_greedy = j["seed_greedy"].get<bool>();
  }
  p.validate();
  return p;
}

void apply_settings(const json& obj, PlanSettings& out,
                    std::initializer_list<std::string_view> extra_keys) {
  if (!obj.is_object()) throw InvalidArgument("settings must be a JSON object");
  static constexpr std::string_view kKnown[] = {"bbox",      "radius_m",   "grid_spacing_m",
                                                "r_merge_m", "exclusions", "immune",
                                                "seed"};
  for (const auto& [key, _] : obj.items()) {
    const bool known = std::find(std::begin(kKnown), std::end(kKnown), key) != std::end(kKnown);
    const bool extra = std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end();
    if (!known && !extra) throw InvalidArgument("unknown key '" + key + "'");
  }
  if (obj.contains("bbox")) out.bbox = bbox_from_json(obj["bbox"]);
  if (obj.contains("radius_m")) out.radius_m = number(obj["radius_m"], "radius_m");
  if (obj.contains("grid_spacing_m")) {
    out.grid_spacing_m = number(obj["grid_spacing_m"], "grid_spacing_m");
  }
  if (obj.contains("r_merge_m")) out.r_merge_m = number(obj["r_merge_m"], "r_merge_m");
  if (obj.contains("exclusions")) {
    try {
      out.exclusions = ingest::parse_exclusion_zones(obj["exclusions"].dump());
    } catch (const FormatError& e) {
      throw InvalidArgument(std::string("exclusions: ") + e.what());
    }
  }
  if (obj.contains("immune")) out.immune = immune_from_json(obj["immune"], out.immune);
  if (obj.contains("seed")) {
    const json& s = obj["seed"];
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                   s.get<std::int64_t>() < 0)) {
      throw InvalidArgument("seed must be a non-negative integer");
    }
    out.seed = s.get<std::uint64_t>();
  }
  out.validate();
}

}  // namespace detail

void PlanSettings::validate() const {
  if (!(radius_m >= 0.0) || !std::isfinite(radius_m)) {
    throw InvalidArgument("radius_m must be a non-negative number");
  }
  if (!(grid_spacing_m > 0.0) || !std::isfinite(grid_spacing_m)) {
    throw InvalidArgument("grid_spacing_m must be positive");
  }
  if (!(r_merge_m > 0.0) || !std::isfinite(r_merge_m)) {
    throw InvalidArgument("r_merge_m must be positive");
  }
  immune.validate();
}

PlanSettings settings_from_json(std::string_view text, PlanSettings base) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("", std::string("invalid JSON: ") + e.what());
  }
  detail::apply_settings(doc, base);
  return base;
}

geo::BBoxLTRD parse_bbox_flag(std::string_view text) {
  std::vector<std::string> parts;
  if (!detail::split_csv_line(text, parts) || parts.size() != 4) {
    throw InvalidArgument("bbox must be lt_lat,lt_lon,rd_lat,rd_lon");
  }
  double v[4];
  for (int i = 0; i < 4; ++i) {
    if (!detail::parse_double(parts[static_cast<std::size_t>(i)], v[i])) {
      throw InvalidArgument("bbox component '" + parts[static_cast<std::size_t>(i)] +
                            "' is not a number");
    }
  }
  return geo::BBoxLTRD(geo::GeoPoint(v[0], v[1]), geo::GeoPoint(v[2], v[3]));
}

}  // namespace poleplan
