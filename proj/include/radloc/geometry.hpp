#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "radloc/random.hpp"

namespace radloc {

/// Geometric tolerance in meters. Boundary-inclusive tests and grazing
/// intersections are resolved at this scale.
inline constexpr double kGeomTol = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

bool operator==(const Point2 &a, const Point2 &b);
double distance(const Point2 &a, const Point2 &b);

struct BoundingBox {
  Point2 lo;
  Point2 hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
  bool contains(const Point2 &p) const;
};

/// Simple polygon with a homogeneous attenuation length. Vertices are
/// normalized to counter-clockwise order on construction.
class BuildingPolygon {
public:
  BuildingPolygon(std::vector<Point2> vertices, double mean_free_path);

  const std::vector<Point2> &vertices() const { return vertices_; }
  double mean_free_path() const { return mean_free_path_; }
  BoundingBox bbox() const { return bbox_; }
  double area() const;

  /// Boundary-inclusive membership.
  bool contains(const Point2 &p) const;
  /// Strict interior membership; points within kGeomTol of the boundary
  /// count as outside, so grazing rays pick up zero chord.
  bool contains_interior(const Point2 &p) const;
  bool on_boundary(const Point2 &p) const;

private:
  std::vector<Point2> vertices_;
  double mean_free_path_;
  BoundingBox bbox_;
};

struct IntensityRange {
  double min_bq = 0.0;
  double max_bq = 0.0;
};

/// The 2-D world: rectangular bounds, disjoint buildings, and the admissible
/// source intensity interval.
class Scene {
public:
  Scene(BoundingBox bounds, std::vector<BuildingPolygon> buildings,
        IntensityRange intensity_range);

  const BoundingBox &bounds() const { return bounds_; }
  const std::vector<BuildingPolygon> &buildings() const { return buildings_; }
  const IntensityRange &intensity_range() const { return intensity_range_; }

private:
  BoundingBox bounds_;
  std::vector<BuildingPolygon> buildings_;
  IntensityRange intensity_range_;
};

/// Strictly convex polygon, counter-clockwise. Produced by convex_hull.
struct ConvexHull {
  std::vector<Point2> vertices;

  BoundingBox bbox() const;
  double area() const;
};

/// Minimal convex polygon containing the inputs; collinear boundary points
/// are dropped. Throws std::invalid_argument for fewer than 3 non-collinear
/// points.
ConvexHull convex_hull(std::span<const Point2> points);

/// Half-plane membership test, boundary-inclusive within kGeomTol meters.
bool point_in_hull(const ConvexHull &hull, const Point2 &p);

/// Uniform draw over the hull by rejection from its bounding box.
Point2 sample_uniform_hull(const ConvexHull &hull, RandomStream &rng);

struct ChordHit {
  std::size_t building_index;
  double length; // meters of the segment interior to that building
};

/// Per-building lengths of segment a->b interior to each building it
/// crosses. Untouched buildings are omitted; endpoints inside a building
/// contribute partial chords. Throws std::invalid_argument when a == b.
std::vector<ChordHit> chord_lengths(const Point2 &a, const Point2 &b,
                                    const Scene &scene);

/// True when the open segment a->b touches or crosses the polygon boundary,
/// or when b lies inside it. Used for detector collision checks.
bool segment_blocked_by(const Point2 &a, const Point2 &b,
                        const BuildingPolygon &poly);
bool segment_blocked(const Point2 &a, const Point2 &b, const Scene &scene);

} // namespace radloc
