#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poleplan/geo.hpp"

namespace poleplan::ingest {

inline constexpr double kDefaultMergeRadiusM = 5.0;
inline constexpr double kDefaultFovDeg = 90.0;
inline constexpr int kHeadings[] = {0, 90, 180, 270};

// One geolocated pole detection as emitted by an external detector.
struct DetectionRecord {
  geo::GeoPoint point;
  double confidence;
  std::string source_id;

  DetectionRecord(geo::GeoPoint p, double conf, std::string source);

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

// Deduplicated pole. `confidence` is the max over merged detections and
// `support` the number merged.
struct PoleCandidate {
  std::size_t id;
  geo::GeoPoint point;
  double confidence;
  std::size_t support;

  friend bool operator==(const PoleCandidate&, const PoleCandidate&) = default;
};

struct CaptureManifestEntry {
  geo::GeoPoint point;
  int heading;
  double fov;
  std::string image_id;
  std::optional<std::string> url;

  friend bool operator==(const CaptureManifestEntry&, const CaptureManifestEntry&) = default;
};

struct ExclusionResult {
  std::vector<PoleCandidate> kept;     // ids re-densified, order preserved
  std::vector<PoleCandidate> dropped;  // original ids and points
};

enum class DetectionFormat { csv, geojson };

// "csv" / "geojson"; anything else throws FormatError.
DetectionFormat parse_format(std::string_view name);
// Guess from a file extension (.csv, .geojson, .json). Defaults to csv.
DetectionFormat format_from_path(std::string_view path);

std::vector<DetectionRecord> parse_detections(std::istream& in, DetectionFormat format);
std::vector<DetectionRecord> parse_detections_csv(std::istream& in);
std::vector<DetectionRecord> parse_detections_geojson(std::istream& in);
void write_detections_csv(std::ostream& out, std::span<const DetectionRecord> records);

// Greedy confidence-ordered clustering. Detections are visited by
// descending confidence (stable on ties); each joins the first cluster, in
// founding order, whose weighted centroid lies within r_merge_m, otherwise
// it founds a new cluster.
std::vector<PoleCandidate> dedup_merge(std::span<const DetectionRecord> detections,
                                       double r_merge_m);

ExclusionResult apply_exclusions(std::span<const PoleCandidate> candidates,
                                 std::span<const geo::Polygon> zones);

// True poles are kept at least kSynthMinSeparationM apart when the box
// allows it, so default-radius dedup recovers them one to one.
inline constexpr double kSynthMinSeparationM = 2.0 * kDefaultMergeRadiusM;
inline constexpr int kSynthMaxRedraws = 64;

std::vector<DetectionRecord> synth_scenario(std::uint64_t seed, const geo::BBoxLTRD& bbox,
                                            std::size_t n_poles, double dup_rate,
                                            double jitter_m);

// Four cardinal headings per grid point. `url_template` may contain
// {lat}, {lon}, {heading} and {fov}; it is only rendered, never fetched.
std::vector<CaptureManifestEntry> build_capture_manifest(
    const geo::BBoxLTRD& bbox, double spacing_m,
    const std::optional<std::string>& url_template = std::nullopt);

std::string render_url_template(std::string_view tmpl, const geo::GeoPoint& p, int heading,
                                double fov);

std::string manifest_to_json(std::span<const CaptureManifestEntry> entries);
std::vector<CaptureManifestEntry> manifest_from_json(std::string_view text);

// Candidate CSV: header `id,lat,lon,confidence,support`.
void write_candidates_csv(std::ostream& out, std::span<const PoleCandidate> candidates);
std::vector<PoleCandidate> parse_candidates_csv(std::istream& in);

// Exclusion zones from JSON text. Accepts a GeoJSON Polygon, MultiPolygon,
// Feature or FeatureCollection ([lon, lat] order, closing vertex optional),
// or a plain array of rings whose vertices are {"lat":..,"lon":..}.
std::vector<geo::Polygon> parse_exclusion_zones(std::string_view text);

}  // namespace poleplan::ingest
