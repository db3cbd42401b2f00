#include "poleplan/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "poleplan/error.hpp"

namespace poleplan::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Absorbs floating-point noise when an extent is an exact multiple of the
// spacing (e.g. 100 m box at 50 m spacing must give 2 cells, not 3).
constexpr double kCountSlack = 1e-9;

std::size_t cells_along(double extent_m, double spacing_m) {
  const double raw = std::ceil(extent_m / spacing_m - kCountSlack);
  return raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
}

// Cross product sign of (b - a) x (p - a) in the lon/lat plane.
double orient(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  return (b.lon() - a.lon()) * (p.lat() - a.lat()) -
         (b.lat() - a.lat()) * (p.lon() - a.lon());
}

bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  if (orient(a, b, p) != 0.0) return false;
  return p.lon() >= std::min(a.lon(), b.lon()) && p.lon() <= std::max(a.lon(), b.lon()) &&
         p.lat() >= std::min(a.lat(), b.lat()) && p.lat() <= std::max(a.lat(), b.lat());
}

}  // namespace

double meters_per_degree_lat() noexcept { return std::numbers::pi * kEarthRadiusM / 180.0; }

double meters_per_degree_lon(double at_lat_deg) noexcept {
  return std::numbers::pi * kEarthRadiusM * std::cos(at_lat_deg * kDegToRad) / 180.0;
}

GeoPoint::GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw InvalidArgument("coordinates must be finite");
  }
  if (lat < -90.0 || lat > 90.0) {
    std::ostringstream os;
    os << "latitude " << lat << " outside [-90, 90]";
    throw InvalidArgument(os.str());
  }
  if (lon < -180.0 || lon > 180.0) {
    std::ostringstream os;
    os << "longitude " << lon << " outside [-180, 180]";
    throw InvalidArgument(os.str());
  }
}

BBoxLTRD::BBoxLTRD(GeoPoint lt, GeoPoint rd) : lt_(lt), rd_(rd) {
  if (!(lt.lat() > rd.lat())) {
    throw InvalidArgument("bbox invariant violated: lt.lat must be greater than rd.lat");
  }
  if (!(lt.lon() < rd.lon())) {
    throw InvalidArgument(
        "bbox invariant violated: lt.lon must be less than rd.lon "
        "(antimeridian-crossing boxes are not supported)");
  }
}

GeoPoint BBoxLTRD::center() const {
  return GeoPoint(mid_lat(), 0.5 * (west() + east()));
}

bool BBoxLTRD::contains(const GeoPoint& p) const noexcept {
  return p.lat() <= north() && p.lat() >= south() && p.lon() >= west() && p.lon() <= east();
}

double BBoxLTRD::extent_north_south_m() const noexcept {
  return (north() - south()) * meters_per_degree_lat();
}

double BBoxLTRD::extent_west_east_m() const noexcept {
  return (east() - west()) * meters_per_degree_lon(mid_lat());
}

Polygon::Polygon(std::vector<GeoPoint> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) throw InvalidArgument("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (vertices_[i] == vertices_[(i + 1) % vertices_.size()]) {
      throw InvalidArgument("polygon has consecutive duplicate vertices at index " +
                            std::to_string(i));
    }
  }
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat() * kDegToRad;
  const double phi2 = b.lat() * kDegToRad;
  const double sdphi = std::sin(0.5 * (phi2 - phi1));
  const double sdlam = std::sin(0.5 * (b.lon() - a.lon()) * kDegToRad);
  const double h = sdphi * sdphi + std::cos(phi1) * std::cos(phi2) * sdlam * sdlam;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

GridLattice grid_lattice(const BBoxLTRD& bbox, double spacing_m) {
  if (!(spacing_m > 0.0) || !std::isfinite(spacing_m)) {
    throw InvalidArgument("grid spacing must be a positive number of metres");
  }
  const double step_lat = spacing_m / meters_per_degree_lat();
  const double step_lon = spacing_m / meters_per_degree_lon(bbox.mid_lat());
  const double span_lat = bbox.north() - bbox.south();
  const double span_lon = bbox.east() - bbox.west();

  GridLattice g;
  g.rows = cells_along(bbox.extent_north_south_m(), spacing_m);
  g.cols = cells_along(bbox.extent_west_east_m(), spacing_m);

  const double off_lat = 0.5 * (span_lat - static_cast<double>(g.rows - 1) * step_lat);
  const double off_lon = 0.5 * (span_lon - static_cast<double>(g.cols - 1) * step_lon);

  g.points.reserve(g.rows * g.cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double lat = std::clamp(bbox.north() - off_lat - static_cast<double>(r) * step_lat,
                                  bbox.south(), bbox.north());
    for (std::size_t c = 0; c < g.cols; ++c) {
      const double lon = std::clamp(bbox.west() + off_lon + static_cast<double>(c) * step_lon,
                                    bbox.west(), bbox.east());
      g.points.emplace_back(lat, lon);
    }
  }
  return g;
}

std::vector<GeoPoint> grid_points(const BBoxLTRD& bbox, double spacing_m) {
  return grid_lattice(bbox, spacing_m).points;
}

bool point_in_polygon(const GeoPoint& p, const Polygon& poly) noexcept {
  auto v = poly.vertices();
  const std::size_t n = v.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const GeoPoint& a = v[i];
    const GeoPoint& b = v[j];
    if (on_segment(a, b, p)) return true;
    if ((a.lat() > p.lat()) != (b.lat() > p.lat())) {
      const double x =
          a.lon() + (p.lat() - a.lat()) * (b.lon() - a.lon()) / (b.lat() - a.lat());
      if (p.lon() < x) inside = !inside;
    }
  }
  return inside;
}

bool inside_any(const GeoPoint& p, std::span<const Polygon> zones) noexcept {
  return std::any_of(zones.begin(), zones.end(),
                     [&](const Polygon& z) { return point_in_polygon(p, z); });
}

}  // namespace poleplan::geo
