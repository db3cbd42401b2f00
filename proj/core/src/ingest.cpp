#include "poleplan/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "poleplan/error.hpp"
#include "poleplan/rng.hpp"
#include "text_format.hpp"

namespace poleplan::ingest {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kDetectionHeader = "lat,lon,confidence,source_id";
constexpr std::string_view kCandidateHeader = "id,lat,lon,confidence,support";

std::string line_ref(std::size_t line) { return "line " + std::to_string(line); }

void strip_bom(std::string& s) {
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
      static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF) {
    s.erase(0, 3);
  }
}

// Reads the header line; returns false for a completely empty stream.
bool read_header(std::istream& in, std::string_view expected) {
  std::string header;
  if (!std::getline(in, header)) return false;
  strip_bom(header);
  if (detail::trim(header) != expected) {
    throw FormatError(line_ref(1), "expected header '" + std::string(expected) + "'");
  }
  return true;
}

double field_double(const std::string& text, std::string_view name, const std::string& where) {
  double v = 0.0;
  if (!detail::parse_double(text, v)) {
    throw FormatError(where, std::string(name) + " is not a finite number: '" + text + "'");
  }
  return v;
}

geo::GeoPoint make_point(double lat, double lon, const std::string& where) {
  try {
    return geo::GeoPoint(lat, lon);
  } catch (const InvalidArgument& e) {
    throw FormatError(where, e.what());
  }
}

void check_confidence(double c, const std::string& where) {
  if (!(c >= 0.0 && c <= 1.0)) {
    throw FormatError(where, "confidence " + detail::format_double(c) + " outside [0, 1]");
  }
}

geo::GeoPoint ring_vertex_lonlat(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() < 2 || !v[0].is_number() || !v[1].is_number()) {
    throw FormatError(where, "polygon vertex must be [lon, lat]");
  }
  return make_point(v[1].get<double>(), v[0].get<double>(), where);
}

geo::Polygon ring_to_polygon(std::vector<geo::GeoPoint> pts, const std::string& where) {
  if (pts.size() >= 2 && pts.front() == pts.back()) pts.pop_back();
  try {
    return geo::Polygon(std::move(pts));
  } catch (const InvalidArgument& e) {
    throw FormatError(where, e.what());
  }
}

void geojson_polygon(const json& rings, std::vector<geo::Polygon>& out, const std::string& where) {
  if (!rings.is_array() || rings.empty()) {
    throw FormatError(where, "Polygon coordinates must be a non-empty array of rings");
  }
  if (rings.size() > 1) throw FormatError(where, "polygon holes are not supported");
  std::vector<geo::GeoPoint> pts;
  if (!rings[0].is_array()) throw FormatError(where, "ring must be an array");
  for (const auto& v : rings[0]) pts.push_back(ring_vertex_lonlat(v, where));
  out.push_back(ring_to_polygon(std::move(pts), where));
}

void geojson_geometry(const json& g, std::vector<geo::Polygon>& out, const std::string& where) {
  if (!g.is_object() || !g.contains("type")) throw FormatError(where, "geometry without type");
  const std::string type = g.at("type").get<std::string>();
  if (type == "Polygon") {
    geojson_polygon(g.at("coordinates"), out, where);
  } else if (type == "MultiPolygon") {
    for (const auto& poly : g.at("coordinates")) geojson_polygon(poly, out, where);
  } else {
    throw FormatError(where, "exclusion geometry must be Polygon or MultiPolygon, got " + type);
  }
}

}  // namespace

DetectionRecord::DetectionRecord(geo::GeoPoint p, double conf, std::string source)
    : point(p), confidence(conf), source_id(std::move(source)) {
  if (!(conf >= 0.0 && conf <= 1.0)) throw InvalidArgument("confidence outside [0, 1]");
}

DetectionFormat parse_format(std::string_view name) {
  if (name == "csv") return DetectionFormat::csv;
  if (name == "geojson") return DetectionFormat::geojson;
  throw FormatError("", "unknown detection format '" + std::string(name) + "'");
}

DetectionFormat format_from_path(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.substr(path.size() - suffix.size()) == suffix;
  };
  if (ends_with(".geojson") || ends_with(".json")) return DetectionFormat::geojson;
  return DetectionFormat::csv;
}

std::vector<DetectionRecord> parse_detections(std::istream& in, DetectionFormat format) {
  switch (format) {
    case DetectionFormat::csv:
      return parse_detections_csv(in);
    case DetectionFormat::geojson:
      return parse_detections_geojson(in);
  }
  throw FormatError("", "unknown detection format");
}

std::vector<DetectionRecord> parse_detections_csv(std::istream& in) {
  std::vector<DetectionRecord> out;
  if (!read_header(in, kDetectionHeader)) return out;
  std::string line;
  std::vector<std::string> fields;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = line_ref(line_no);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!detail::split_csv_line(line, fields)) throw FormatError(where, "malformed quoting");
    if (fields.size() != 4) {
      throw FormatError(where, "expected 4 fields, got " + std::to_string(fields.size()));
    }
    const double lat = field_double(fields[0], "lat", where);
    const double lon = field_double(fields[1], "lon", where);
    const double conf = field_double(fields[2], "confidence", where);
    check_confidence(conf, where);
    out.emplace_back(make_point(lat, lon, where), conf, fields[3]);
  }
  return out;
}

std::vector<DetectionRecord> parse_detections_geojson(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
    throw FormatError("", "expected a GeoJSON FeatureCollection");
  }
  if (!doc.contains("features") || !doc["features"].is_array()) {
    throw FormatError("", "FeatureCollection without a features array");
  }
  std::vector<DetectionRecord> out;
  const auto& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::string where = "feature " + std::to_string(i);
    const json& f = features[i];
    if (!f.is_object() || f.value("type", "") != "Feature") {
      throw FormatError(where, "not a Feature");
    }
    const json* geom = f.contains("geometry") ? &f["geometry"] : nullptr;
    if (geom == nullptr || !geom->is_object() || geom->value("type", "") != "Point") {
      throw FormatError(where, "geometry must be a Point");
    }
    const json& c = (*geom)["coordinates"];
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
      throw FormatError(where, "Point coordinates must be [lon, lat]");
    }
    const json* props = f.contains("properties") ? &f["properties"] : nullptr;
    if (props == nullptr || !props->is_object() || !props->contains("confidence") ||
        !(*props)["confidence"].is_number()) {
      throw FormatError(where, "properties.confidence must be a number");
    }
    const double conf = (*props)["confidence"].get<double>();
    check_confidence(conf, where);
    std::string source;
    if (props->contains("source_id")) {
      if (!(*props)["source_id"].is_string()) {
        throw FormatError(where, "properties.source_id must be a string");
      }
      source = (*props)["source_id"].get<std::string>();
    }
    out.emplace_back(make_point(c[1].get<double>(), c[0].get<double>(), where), conf,
                     std::move(source));
  }
  return out;
}

void write_detections_csv(std::ostream& out, std::span<const DetectionRecord> records) {
  out << kDetectionHeader << '\n';
  for (const auto& r : records) {
    out << detail::format_double(r.point.lat()) << ',' << detail::format_double(r.point.lon())
        << ',' << detail::format_double(r.confidence) << ',' << detail::csv_escape(r.source_id)
        << '\n';
  }
}

std::vector<PoleCandidate> dedup_merge(std::span<const DetectionRecord> detections,
                                       double r_merge_m) {
  if (!(r_merge_m > 0.0)) throw InvalidArgument("merge radius must be positive");

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });

  struct Cluster {
    double w = 0, w_lat = 0, w_lon = 0;  // confidence-weighted sums
    double lat_sum = 0, lon_sum = 0;     // fallback when all weights are zero
    std::size_t count = 0;
    double max_conf = 0;
    geo::GeoPoint centroid{0, 0};

    void add(const DetectionRecord& d) {
      w += d.confidence;
      w_lat += d.confidence * d.point.lat();
      w_lon += d.confidence * d.point.lon();
      lat_sum += d.point.lat();
      lon_sum += d.point.lon();
      ++count;
      max_conf = std::max(max_conf, d.confidence);
      if (count == 1) {
        centroid = d.point;
      } else if (w > 0.0) {
        centroid = geo::GeoPoint(std::clamp(w_lat / w, -90.0, 90.0),
                                 std::clamp(w_lon / w, -180.0, 180.0));
      } else {
        const double n = static_cast<double>(count);
        centroid = geo::GeoPoint(std::clamp(lat_sum / n, -90.0, 90.0),
                                 std::clamp(lon_sum / n, -180.0, 180.0));
      }
    }
  };

  std::vector<Cluster> clusters;
  for (std::size_t idx : order) {
    const DetectionRecord& d = detections[idx];
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) {
      return geo::haversine_m(c.centroid, d.point) <= r_merge_m;
    });
    if (it == clusters.end()) {
      clusters.emplace_back();
      clusters.back().add(d);
    } else {
      it->add(d);
    }
  }

  std::vector<PoleCandidate> out;
  out.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    out.push_back(PoleCandidate{i, clusters[i].centroid, clusters[i].max_conf,
                                clusters[i].count});
  }
  return out;
}

ExclusionResult apply_exclusions(std::span<const PoleCandidate> candidates,
                                 std::span<const geo::Polygon> zones) {
  ExclusionResult r;
  for (const auto& c : candidates) {
    if (geo::inside_any(c.point, zones)) {
      r.dropped.push_back(c);
    } else {
      PoleCandidate k = c;
      k.id = r.kept.size();
      r.kept.push_back(k);
    }
  }
  return r;
}

std::vector<DetectionRecord> synth_scenario(std::uint64_t seed, const geo::BBoxLTRD& bbox,
                                            std::size_t n_poles, double dup_rate,
                                            double jitter_m) {
  if (!(dup_rate >= 0.0) || !(jitter_m >= 0.0)) {
    throw InvalidArgument("dup_rate and jitter_m must be non-negative");
  }
  Rng rng(seed);
  std::vector<DetectionRecord> out;
  std::vector<geo::GeoPoint> poles;
  poles.reserve(n_poles);
  const double min_sep_lat = kSynthMinSeparationM / geo::meters_per_degree_lat();
  for (std::size_t i = 0; i < n_poles; ++i) {
    // Redraw poles that land too close to an earlier one; a crowded box
    // falls back to the last draw after a bounded number of attempts.
    double lat = 0, lon = 0;
    for (int attempt = 0; attempt < kSynthMaxRedraws; ++attempt) {
      lat = rng.uniform(bbox.south(), bbox.north());
      lon = rng.uniform(bbox.west(), bbox.east());
      const geo::GeoPoint p(lat, lon);
      const bool crowded = std::any_of(poles.begin(), poles.end(), [&](const geo::GeoPoint& q) {
        return std::abs(q.lat() - lat) <= min_sep_lat &&
               geo::haversine_m(p, q) < kSynthMinSeparationM;
      });
      if (!crowded) break;
    }
    const geo::GeoPoint pole(lat, lon);
    poles.push_back(pole);
    const std::string base = "synth-" + std::to_string(i);
    out.emplace_back(pole, rng.uniform(0.5, 1.0), base);

    const std::uint64_t extras = rng.poisson(dup_rate);
    for (std::uint64_t j = 0; j < extras; ++j) {
      const double r = jitter_m * std::sqrt(rng.uniform());
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      const double dlat = r * std::cos(theta) / geo::meters_per_degree_lat();
      const double dlon = r * std::sin(theta) / geo::meters_per_degree_lon(lat);
      const geo::GeoPoint p(std::clamp(lat + dlat, -90.0, 90.0),
                            std::clamp(lon + dlon, -180.0, 180.0));
      out.emplace_back(p, rng.uniform(0.5, 1.0), base + "-" + std::to_string(j + 1));
    }
  }
  return out;
}

std::string render_url_template(std::string_view tmpl, const geo::GeoPoint& p, int heading,
                                double fov) {
  std::string out;
  out.reserve(tmpl.size() + 32);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    auto try_token = [&](std::string_view token, const std::string& value) {
      if (tmpl.substr(i, token.size()) == token) {
        out += value;
        i += token.size();
        return true;
      }
      return false;
    };
    if (tmpl[i] == '{' && (try_token("{lat}", detail::format_double(p.lat())) ||
                           try_token("{lon}", detail::format_double(p.lon())) ||
                           try_token("{heading}", std::to_string(heading)) ||
                           try_token("{fov}", detail::format_double(fov)))) {
      continue;
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::vector<CaptureManifestEntry> build_capture_manifest(
    const geo::BBoxLTRD& bbox, double spacing_m, const std::optional<std::string>& url_template) {
  const geo::GridLattice grid = geo::grid_lattice(bbox, spacing_m);
  std::vector<CaptureManifestEntry> out;
  out.reserve(grid.points.size() * std::size(kHeadings));
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const geo::GeoPoint& p = grid.points[r * grid.cols + c];
      for (int h : kHeadings) {
        CaptureManifestEntry e{p, h, kDefaultFovDeg,
                               "r" + std::to_string(r) + "_c" + std::to_string(c) + "_h" +
                                   std::to_string(h),
                               std::nullopt};
        if (url_template) e.url = render_url_template(*url_template, p, h, kDefaultFovDeg);
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

std::string manifest_to_json(std::span<const CaptureManifestEntry> entries) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json o;
    o["lat"] = e.point.lat();
    o["lon"] = e.point.lon();
    o["heading"] = e.heading;
    o["fov"] = e.fov;
    o["image_id"] = e.image_id;
    if (e.url) o["url"] = *e.url;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<CaptureManifestEntry> manifest_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw FormatError("", "manifest must be a JSON array");
  std::vector<CaptureManifestEntry> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "entry " + std::to_string(i);
    const json& o = doc[i];
    try {
      CaptureManifestEntry e{make_point(o.at("lat").get<double>(), o.at("lon").get<double>(),
                                        where),
                             o.at("heading").get<int>(), o.at("fov").get<double>(),
                             o.at("image_id").get<std::string>(), std::nullopt};
      if (o.contains("url")) e.url = o["url"].get<std::string>();
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw FormatError(where, ex.what());
    }
  }
  return out;
}

void write_candidates_csv(std::ostream& out, std::span<const PoleCandidate> candidates) {
  out << kCandidateHeader << '\n';
  for (const auto& c : candidates) {
    out << c.id << ',' << detail::format_double(c.point.lat()) << ','
        << detail::format_double(c.point.lon()) << ',' << detail::format_double(c.confidence)
        << ',' << c.support << '\n';
  }
}

std::vector<PoleCandidate> parse_candidates_csv(std::istream& in) {
  std::vector<PoleCandidate> out;
  if (!read_header(in, kCandidateHeader)) return out;
  std::string line;
  std::vector<std::string> fields;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = line_ref(line_no);
    if (!detail::split_csv_line(detail::trim(line), fields) || fields.size() != 5) {
      throw FormatError(where, "expected 5 fields");
    }
    std::size_t id = 0;
    std::size_t support = 0;
    if (!detail::parse_size(fields[0], id)) throw FormatError(where, "bad id");
    if (!detail::parse_size(fields[4], support) || support == 0) {
      throw FormatError(where, "support must be a positive integer");
    }
    if (id != out.size()) throw FormatError(where, "candidate ids must be dense 0..N-1");
    const double conf = field_double(fields[3], "confidence", where);
    check_confidence(conf, where);
    out.push_back(PoleCandidate{id,
                                make_point(field_double(fields[1], "lat", where),
                                           field_double(fields[2], "lon", where), where),
                                conf, support});
  }
  return out;
}

std::vector<geo::Polygon> parse_exclusion_zones(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("", std::string("invalid JSON: ") + e.what());
  }
  std::vector<geo::Polygon> out;
  try {
    if (doc.is_array()) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string where = "zone " + std::to_string(i);
        if (!doc[i].is_array()) throw FormatError(where, "zone must be an array of vertices");
        std::vector<geo::GeoPoint> pts;
        for (const auto& v : doc[i]) {
          if (!v.is_object()) throw FormatError(where, "vertex must be {\"lat\", \"lon\"}");
          pts.push_back(make_point(v.at("lat").get<double>(), v.at("lon").get<double>(), where));
        }
        out.push_back(ring_to_polygon(std::move(pts), where));
      }
      return out;
    }
    if (!doc.is_object()) throw FormatError("", "exclusions must be GeoJSON or an array");
    const std::string type = doc.value("type", "");
    if (type == "FeatureCollection") {
      const auto& features = doc.at("features");
      for (std::size_t i = 0; i < features.size(); ++i) {
        geojson_geometry(features[i].at("geometry"), out, "feature " + std::to_string(i));
      }
    } else if (type == "Feature") {
      geojson_geometry(doc.at("geometry"), out, "feature 0");
    } else {
      geojson_geometry(doc, out, "geometry");
    }
  } catch (const json::exception& e) {
    throw FormatError("", std::string("bad exclusion zones: ") + e.what());
  }
  return out;
}

}  // namespace poleplan::ingest
