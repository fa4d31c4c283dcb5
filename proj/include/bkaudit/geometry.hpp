#pragma once

#include <optional>
#include <vector>

#include "bkaudit/types.hpp"

namespace bkaudit {

using Vec2 = Eigen::Vector2d;
using Polygon = std::vector<Vec2>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// Signed shoelace area (positive for counter-clockwise order).
double signed_area(const Polygon& poly);
double polygon_area(const Polygon& poly);
Vec2 polygon_centroid(const Polygon& poly);

// Sutherland-Hodgman clip of a convex polygon against {x : a.x <= b}.
Polygon clip_halfplane(const Polygon& poly, const Vec2& a, double b);
Polygon box_polygon(const Box& b);

// {m in box : lo_i <= (A m)_i <= hi_i}, A with two columns.
Polygon linear_feasible_polygon(const Matrix& A, const Point& lo, const Point& hi, const Box& box);

// 1D counterpart for a single-column A; empty optional if infeasible.
std::optional<Interval> linear_feasible_interval(const Matrix& A, const Point& lo, const Point& hi,
                                                 const Interval& box);

std::optional<Interval> intersect(const Interval& a, const Interval& b);

bool point_in_convex_polygon(const Polygon& poly, const Vec2& p, double tol = 0.0);

}  // namespace bkaudit
