#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace poleplan::geo {

// Mean Earth radius (IUGG) in metres.
inline constexpr double kEarthRadiusM = 6'371'008.8;

double meters_per_degree_lat() noexcept;
double meters_per_degree_lon(double at_lat_deg) noexcept;

// WGS84 coordinate in degrees. Construction validates range and finiteness.
class GeoPoint {
 public:
  GeoPoint(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_;
  double lon_;
};

// Planning rectangle given by its left-top (max lat, min lon) and
// right-down (min lat, max lon) corners.
class BBoxLTRD {
 public:
  BBoxLTRD(GeoPoint lt, GeoPoint rd);

  const GeoPoint& lt() const noexcept { return lt_; }
  const GeoPoint& rd() const noexcept { return rd_; }

  double north() const noexcept { return lt_.lat(); }
  double south() const noexcept { return rd_.lat(); }
  double west() const noexcept { return lt_.lon(); }
  double east() const noexcept { return rd_.lon(); }
  double mid_lat() const noexcept { return 0.5 * (north() + south()); }
  GeoPoint center() const;

  bool contains(const GeoPoint& p) const noexcept;
  double extent_north_south_m() const noexcept;
  double extent_west_east_m() const noexcept;

  friend bool operator==(const BBoxLTRD&, const BBoxLTRD&) = default;

 private:
  GeoPoint lt_;
  GeoPoint rd_;
};

// Simple ring in the lat/lon plane, implicitly closed.
class Polygon {
 public:
  explicit Polygon(std::vector<GeoPoint> vertices);

  std::span<const GeoPoint> vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  std::vector<GeoPoint> vertices_;
};

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

struct GridLattice {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<GeoPoint> points;  // row-major, north to south, west to east
};

// Cell-centre lattice over the box. Per axis the count is
// max(1, ceil(extent / spacing)); the lattice is centred so every point
// stays inside the box.
GridLattice grid_lattice(const BBoxLTRD& bbox, double spacing_m);
std::vector<GeoPoint> grid_points(const BBoxLTRD& bbox, double spacing_m);

// Even-odd ray casting in the lat/lon plane. Points on an edge or vertex
// count as inside.
bool point_in_polygon(const GeoPoint& p, const Polygon& poly) noexcept;

bool inside_any(const GeoPoint& p, std::span<const Polygon> zones) noexcept;

}  // namespace poleplan::geo
