#include "bkaudit/geometry.hpp"

#include <cmath>

#include "bkaudit/errors.hpp"

namespace bkaudit {

Box::Box(Point lo_, Point hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) fail(ErrorKind::DimensionMismatch, "box lo/hi sizes differ");
  if (lo.size() == 0) fail(ErrorKind::DimensionMismatch, "empty box");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) fail(ErrorKind::DomainError, "box requires lo < hi on every axis");
  }
}

Box Box::unit(int dim) { return Box(Point::Zero(dim), Point::Ones(dim)); }

Box Box::cube(const Point& center, double half_width) {
  return Box(center.array() - half_width, center.array() + half_width);
}

double Box::volume() const { return (hi - lo).prod(); }

bool Box::contains(const Point& x) const {
  if (x.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  }
  return true;
}

Point make_point(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

double signed_area(const Polygon& poly) {
  const size_t n = poly.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

double polygon_area(const Polygon& poly) { return std::abs(signed_area(poly)); }

Vec2 polygon_centroid(const Polygon& poly) {
  const double a = signed_area(poly);
  if (std::abs(a) < 1e-300) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : poly) c += p;
    return poly.empty() ? c : Vec2(c / static_cast<double>(poly.size()));
  }
  Vec2 c = Vec2::Zero();
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double cr = p.x() * q.y() - q.x() * p.y();
    c += (p + q) * cr;
  }
  return c / (6.0 * a);
}

Polygon clip_halfplane(const Polygon& poly, const Vec2& a, double b) {
  Polygon out;
  const size_t n = poly.size();
  if (n == 0) return out;
  // scale-aware tolerance so vertices on the line are kept once
  const double tol = 1e-13 * (std::abs(b) + a.norm());
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double fp = a.dot(p) - b;
    const double fq = a.dot(q) - b;
    const bool pin = fp <= tol;
    const bool qin = fq <= tol;
    if (pin) out.push_back(p);
    if (pin != qin) {
      const double t = fp / (fp - fq);
      if (t > 0.0 && t < 1.0) out.push_back(p + t * (q - p));
    }
  }
  // drop consecutive duplicates
  Polygon clean;
  for (const auto& p : out) {
    if (clean.empty() || (p - clean.back()).norm() > 1e-15) clean.push_back(p);
  }
  if (clean.size() > 1 && (clean.front() - clean.back()).norm() <= 1e-15) clean.pop_back();
  return clean;
}

Polygon box_polygon(const Box& b) {
  if (b.dim() != 2) fail(ErrorKind::DimensionMismatch, "box_polygon needs a 2D box");
  return {Vec2(b.lo[0], b.lo[1]), Vec2(b.hi[0], b.lo[1]), Vec2(b.hi[0], b.hi[1]),
          Vec2(b.lo[0], b.hi[1])};
}

Polygon linear_feasible_polygon(const Matrix& A, const Point& lo, const Point& hi, const Box& box) {
  if (A.cols() != 2 || box.dim() != 2 || lo.size() != A.rows() || hi.size() != A.rows()) {
    fail(ErrorKind::DimensionMismatch, "linear_feasible_polygon shape mismatch");
  }
  Polygon poly = box_polygon(box);
  for (Eigen::Index i = 0; i < A.rows() && !poly.empty(); ++i) {
    const Vec2 a(A(i, 0), A(i, 1));
    if (a.norm() == 0.0) {
      if (lo[i] > 0.0 || hi[i] < 0.0) return {};
      continue;
    }
    poly = clip_halfplane(poly, a, hi[i]);
    poly = clip_halfplane(poly, -a, -lo[i]);
  }
  if (poly.size() < 3) return {};
  return poly;
}

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  if (r.lo > r.hi) return std::nullopt;
  return r;
}

std::optional<Interval> linear_feasible_interval(const Matrix& A, const Point& lo, const Point& hi,
                                                 const Interval& box) {
  if (A.cols() != 1 || lo.size() != A.rows() || hi.size() != A.rows()) {
    fail(ErrorKind::DimensionMismatch, "linear_feasible_interval shape mismatch");
  }
  Interval cur = box;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double g = A(i, 0);
    if (g == 0.0) {
      if (lo[i] > 0.0 || hi[i] < 0.0) return std::nullopt;
      continue;
    }
    Interval r = g > 0 ? Interval{lo[i] / g, hi[i] / g} : Interval{hi[i] / g, lo[i] / g};
    auto next = intersect(cur, r);
    if (!next) return std::nullopt;
    cur = *next;
  }
  return cur;
}

bool point_in_convex_polygon(const Polygon& poly, const Vec2& p, double tol) {
  const size_t n = poly.size();
  if (n < 3) return false;
  const double orient = signed_area(poly) >= 0 ? 1.0 : -1.0;
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double cr = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    if (orient * cr < -tol) return false;
  }
  return true;
}

}  // namespace bkaudit
