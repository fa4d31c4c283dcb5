#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bkaudit/types.hpp"

namespace bkaudit {

// Invertible coordinate transform with Jacobian-determinant access.
// Immutable after construction; copies share the same definition.
class Diffeo {
 public:
  struct Def {
    std::string name;
    int dim = 0;
    VectorField fwd;
    VectorField inv;
    ScalarField jac;       // |det J_fwd|(x); empty -> finite differences
    ScalarField inv_jac;   // |det J_inv|(y); empty -> finite differences
    std::function<bool(const Point&)> in_domain;  // forward domain
    std::function<bool(const Point&)> in_range;   // inverse domain
    std::function<bool(const Box&)> box_ok;      // box inside domain, no singularity crossed
    std::function<bool(const Box&)> inv_box_ok;
    std::function<Box(const Box&)> image_box;    // empty -> corners if axis_monotone
    std::function<Box(const Box&)> inv_image_box;
    bool axis_monotone = false;
  };

  explicit Diffeo(Def def);

  const std::string& name() const { return def_->name; }
  int dim() const { return def_->dim; }
  bool axis_monotone() const { return def_->axis_monotone; }
  bool has_analytic_jacobian() const { return static_cast<bool>(def_->jac); }

  bool in_domain(const Point& x) const;
  bool in_range(const Point& y) const;
  bool box_ok(const Box& b) const;

  Point apply(const Point& x) const;
  Point invert(const Point& y) const;

  // |det J| of the forward map at x (analytic when available).
  double jac_det_abs(const Point& x) const;
  // |det J| of the inverse map at y.
  double inv_jac_det_abs(const Point& y) const;
  // Finite-difference determinant of the forward map, regardless of analytic form.
  double fd_jac_det_abs(const Point& x) const;

  // Image of a box under the forward map; nullopt when not decidable.
  std::optional<Box> image_box(const Box& b) const;

  Diffeo inverse() const;

 private:
  std::shared_ptr<const Def> def_;
};

// Central differences; h <= 0 selects 1e-6*(1+|x_i|) per axis.
Matrix fd_jacobian(const VectorField& map, const Point& x, double h = 0.0);

Diffeo compose(const Diffeo& a, const Diffeo& b);  // a after b

namespace diffeos {

Diffeo identity(int dim);
Diffeo reciprocal(int dim);
Diffeo tan_axis0(int dim);
Diffeo square_axis0(int dim);
Diffeo cubic(int dim);
Diffeo odd_cubic(int dim);  // x + x^3/3 per axis, Jacobian >= 1
Diffeo cart_to_spherical();
Diffeo hyperbolic_Trho();
Diffeo affine(const Matrix& A, const Point& b, const std::string& name = "affine");
Diffeo permutation(const std::vector<int>& perm);

}  // namespace diffeos

// Registry lookup by string id. Dimension-generic ids take `dim`.
Diffeo diffeo_from_id(const std::string& id, int dim);
const std::vector<std::string>& diffeo_ids();

}  // namespace bkaudit
