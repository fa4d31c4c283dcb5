#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace bkaudit {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Point(const Point&)>;

// Axis-aligned box. Boundaries count as inside.
struct Box {
  Point lo;
  Point hi;

  Box() = default;
  Box(Point lo_, Point hi_);
  static Box unit(int dim);
  static Box cube(const Point& center, double half_width);

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  bool contains(const Point& x) const;
  Point center() const { return 0.5 * (lo + hi); }
  Point width() const { return hi - lo; }
};

Point make_point(std::initializer_list<double> xs);

}  // namespace bkaudit
