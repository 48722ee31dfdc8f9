#include "radloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radloc {

namespace {

double cross(const Point2 &o, const Point2 &a, const Point2 &b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double dot(double ax, double ay, double bx, double by) {
  return ax * bx + ay * by;
}

double segment_point_distance(const Point2 &a, const Point2 &b,
                              const Point2 &p) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0.0)
    return std::hypot(p.x - a.x, p.y - a.y);
  double t = dot(p.x - a.x, p.y - a.y, vx, vy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

/// Signed distance of p from the directed line a->b (positive on the left).
double signed_line_distance(const Point2 &a, const Point2 &b, const Point2 &p) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  return cross(a, b, p) / len;
}

/// Inclusive segment intersection test (touching counts), robust at kGeomTol.
bool segments_touch(const Point2 &a, const Point2 &b, const Point2 &c,
                    const Point2 &d) {
  const double sa = signed_line_distance(c, d, a);
  const double sb = signed_line_distance(c, d, b);
  if ((sa > kGeomTol && sb > kGeomTol) || (sa < -kGeomTol && sb < -kGeomTol))
    return false;
  const double sc = signed_line_distance(a, b, c);
  const double sd = signed_line_distance(a, b, d);
  if ((sc > kGeomTol && sd > kGeomTol) || (sc < -kGeomTol && sd < -kGeomTol))
    return false;
  if (std::fabs(sa) <= kGeomTol && std::fabs(sb) <= kGeomTol &&
      std::fabs(sc) <= kGeomTol && std::fabs(sd) <= kGeomTol) {
    // collinear: check 1-D interval overlap on the dominant axis
    const bool use_x = std::fabs(b.x - a.x) + std::fabs(d.x - c.x) >=
                       std::fabs(b.y - a.y) + std::fabs(d.y - c.y);
    const double a1 = use_x ? a.x : a.y, b1 = use_x ? b.x : b.y;
    const double c1 = use_x ? c.x : c.y, d1 = use_x ? d.x : d.y;
    return std::max(std::min(a1, b1), std::min(c1, d1)) <=
           std::min(std::max(a1, b1), std::max(c1, d1)) + kGeomTol;
  }
  return true;
}

double shoelace_area(const std::vector<Point2> &v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2 &p = v[i];
    const Point2 &q = v[(i + 1) % v.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

bool crossing_parity(const std::vector<Point2> &v, const Point2 &p) {
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double xint =
          v[i].x + (p.y - v[i].y) * (v[j].x - v[i].x) / (v[j].y - v[i].y);
      if (p.x < xint)
        inside = !inside;
    }
  }
  return inside;
}

BoundingBox vertices_bbox(const std::vector<Point2> &v) {
  BoundingBox b{v.front(), v.front()};
  for (const Point2 &p : v) {
    b.lo.x = std::min(b.lo.x, p.x);
    b.lo.y = std::min(b.lo.y, p.y);
    b.hi.x = std::max(b.hi.x, p.x);
    b.hi.y = std::max(b.hi.y, p.y);
  }
  return b;
}

} // namespace

bool operator==(const Point2 &a, const Point2 &b) {
  return a.x == b.x && a.y == b.y;
}

double distance(const Point2 &a, const Point2 &b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

bool BoundingBox::contains(const Point2 &p) const {
  return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
}

BuildingPolygon::BuildingPolygon(std::vector<Point2> vertices,
                                 double mean_free_path)
    : vertices_(std::move(vertices)), mean_free_path_(mean_free_path) {
  if (vertices_.size() < 3)
    throw std::invalid_argument("building polygon needs at least 3 vertices");
  if (!(mean_free_path_ > 0.0) || !std::isfinite(mean_free_path_))
    throw std::invalid_argument("building mean free path must be positive");
  for (const Point2 &p : vertices_)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("building vertex is not finite");

  const double area2 = shoelace_area(vertices_);
  if (std::fabs(area2) < 1e-12)
    throw std::invalid_argument("building polygon has zero area");
  if (area2 < 0.0)
    std::reverse(vertices_.begin(), vertices_.end());

  // simplicity: no two non-adjacent edges may touch
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent)
        continue;
      if (segments_touch(vertices_[i], vertices_[(i + 1) % n], vertices_[j],
                         vertices_[(j + 1) % n]))
        throw std::invalid_argument("building polygon is self-intersecting");
    }
  }
  bbox_ = vertices_bbox(vertices_);
}

double BuildingPolygon::area() const { return std::fabs(shoelace_area(vertices_)); }

bool BuildingPolygon::on_boundary(const Point2 &p) const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i)
    if (segment_point_distance(vertices_[i], vertices_[(i + 1) % n], p) <=
        kGeomTol)
      return true;
  return false;
}

bool BuildingPolygon::contains(const Point2 &p) const {
  if (p.x < bbox_.lo.x - kGeomTol || p.x > bbox_.hi.x + kGeomTol ||
      p.y < bbox_.lo.y - kGeomTol || p.y > bbox_.hi.y + kGeomTol)
    return false;
  return on_boundary(p) || crossing_parity(vertices_, p);
}

bool BuildingPolygon::contains_interior(const Point2 &p) const {
  if (!bbox_.contains(p))
    return false;
  return !on_boundary(p) && crossing_parity(vertices_, p);
}

Scene::Scene(BoundingBox bounds, std::vector<BuildingPolygon> buildings,
             IntensityRange intensity_range)
    : bounds_(bounds), buildings_(std::move(buildings)),
      intensity_range_(intensity_range) {
  if (!(bounds_.width() > 0.0) || !(bounds_.height() > 0.0))
    throw std::invalid_argument("scene bounds must be nonempty");
  if (!(intensity_range_.min_bq > 0.0))
    throw std::invalid_argument("intensity range minimum must be positive");
  if (!(intensity_range_.min_bq < intensity_range_.max_bq))
    throw std::invalid_argument("intensity range must satisfy min < max");
  for (const BuildingPolygon &b : buildings_)
    for (const Point2 &p : b.vertices())
      if (!bounds_.contains(p))
        throw std::invalid_argument("building extends outside scene bounds");
  for (std::size_t i = 0; i < buildings_.size(); ++i) {
    for (std::size_t j = i + 1; j < buildings_.size(); ++j) {
      const auto &pi = buildings_[i];
      const auto &pj = buildings_[j];
      bool overlap = pj.contains(pi.vertices().front()) ||
                     pi.contains(pj.vertices().front());
      const std::size_t ni = pi.vertices().size(), nj = pj.vertices().size();
      for (std::size_t e = 0; e < ni && !overlap; ++e)
        for (std::size_t f = 0; f < nj && !overlap; ++f)
          overlap = segments_touch(pi.vertices()[e], pi.vertices()[(e + 1) % ni],
                                   pj.vertices()[f], pj.vertices()[(f + 1) % nj]);
      if (overlap)
        throw std::invalid_argument("buildings must be pairwise disjoint");
    }
  }
}

BoundingBox ConvexHull::bbox() const { return vertices_bbox(vertices); }

double ConvexHull::area() const { return std::fabs(shoelace_area(vertices)); }

ConvexHull convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point2 &a, const Point2 &b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3)
    throw std::invalid_argument("convex hull needs at least 3 distinct points");

  // Andrew's monotone chain; pops collinear points, so the hull is strictly
  // convex. Collinearity threshold is kGeomTol of lateral offset.
  const auto non_left = [](const Point2 &o, const Point2 &a, const Point2 &b) {
    const double len = std::hypot(a.x - o.x, a.y - o.y);
    return cross(o, a, b) <= kGeomTol * std::max(len, 1.0);
  };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2 &p : pts) { // lower chain
    while (k >= 2 && non_left(hull[k - 2], hull[k - 1], p))
      --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) { // upper chain
    while (k >= lower && non_left(hull[k - 2], hull[k - 1], *it))
      --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  if (hull.size() < 3)
    throw std::invalid_argument("convex hull degenerate: input is collinear");
  return ConvexHull{std::move(hull)};
}

bool point_in_hull(const ConvexHull &hull, const Point2 &p) {
  const std::size_t n = hull.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 &a = hull.vertices[i];
    const Point2 &b = hull.vertices[(i + 1) % n];
    if (signed_line_distance(a, b, p) < -kGeomTol)
      return false;
  }
  return true;
}

Point2 sample_uniform_hull(const ConvexHull &hull, RandomStream &rng) {
  if (!(hull.area() > kGeomTol))
    throw std::invalid_argument("cannot sample from a zero-area hull");
  const BoundingBox box = hull.bbox();
  for (long attempt = 0; attempt < 100000000L; ++attempt) {
    const Point2 p{rng.uniform(box.lo.x, box.hi.x),
                   rng.uniform(box.lo.y, box.hi.y)};
    if (point_in_hull(hull, p))
      return p;
  }
  throw std::runtime_error("hull rejection sampling failed to accept");
}

std::vector<ChordHit> chord_lengths(const Point2 &a, const Point2 &b,
                                    const Scene &scene) {
  const double len = distance(a, b);
  if (len < 1e-12)
    throw std::invalid_argument("chord_lengths: degenerate segment (a == b)");
  const double rx = b.x - a.x, ry = b.y - a.y;

  const BoundingBox seg_box{{std::min(a.x, b.x), std::min(a.y, b.y)},
                            {std::max(a.x, b.x), std::max(a.y, b.y)}};

  std::vector<ChordHit> hits;
  std::vector<double> ts;
  for (std::size_t h = 0; h < scene.buildings().size(); ++h) {
    const BuildingPolygon &poly = scene.buildings()[h];
    const BoundingBox pb = poly.bbox();
    if (pb.lo.x > seg_box.hi.x + kGeomTol || pb.hi.x < seg_box.lo.x - kGeomTol ||
        pb.lo.y > seg_box.hi.y + kGeomTol || pb.hi.y < seg_box.lo.y - kGeomTol)
      continue;

    // split the segment at every boundary crossing, then classify each piece
    // by its midpoint
    ts.clear();
    ts.push_back(0.0);
    ts.push_back(1.0);
    const std::size_t n = poly.vertices().size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 &p = poly.vertices()[i];
      const Point2 &q = poly.vertices()[(i + 1) % n];
      const double sx = q.x - p.x, sy = q.y - p.y;
      const double denom = rx * sy - ry * sx;
      if (std::fabs(denom) < 1e-14)
        continue; // parallel; adjacent edges provide the split points
      const double t = ((p.x - a.x) * sy - (p.y - a.y) * sx) / denom;
      const double u = ((p.x - a.x) * ry - (p.y - a.y) * rx) / denom;
      if (t >= -1e-12 && t <= 1.0 + 1e-12 && u >= -1e-12 && u <= 1.0 + 1e-12)
        ts.push_back(std::clamp(t, 0.0, 1.0));
    }
    std::sort(ts.begin(), ts.end());

    double inside_len = 0.0;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double t0 = ts[i], t1 = ts[i + 1];
      if (t1 - t0 < 1e-12)
        continue;
      const double tm = 0.5 * (t0 + t1);
      const Point2 mid{a.x + tm * rx, a.y + tm * ry};
      if (poly.contains_interior(mid))
        inside_len += (t1 - t0) * len;
    }
    if (inside_len > kGeomTol)
      hits.push_back(ChordHit{h, inside_len});
  }
  return hits;
}

bool segment_blocked_by(const Point2 &a, const Point2 &b,
                        const BuildingPolygon &poly) {
  if (poly.contains(b))
    return true;
  const std::size_t n = poly.vertices().size();
  for (std::size_t i = 0; i < n; ++i)
    if (segments_touch(a, b, poly.vertices()[i], poly.vertices()[(i + 1) % n]))
      return true;
  return false;
}

bool segment_blocked(const Point2 &a, const Point2 &b, const Scene &scene) {
  for (const BuildingPolygon &poly : scene.buildings())
    if (segment_blocked_by(a, b, poly))
      return true;
  return false;
}

} // namespace radloc
