#include "bkaudit/coords.hpp"

#include <cmath>

#include "bkaudit/errors.hpp"

namespace bkaudit {

namespace {

constexpr double kSingular = 1e-14;

void check_dim(const Point& x, int dim, const std::string& who) {
  if (x.size() != dim) {
    fail(ErrorKind::DimensionMismatch,
         who + ": expected dimension " + std::to_string(dim) + ", got " + std::to_string(x.size()));
  }
}

Box corner_image(const Box& b, const VectorField& map) {
  const Point a = map(b.lo);
  const Point c = map(b.hi);
  return Box(a.cwiseMin(c), a.cwiseMax(c));
}

}  // namespace

Diffeo::Diffeo(Def def) : def_(std::make_shared<const Def>(std::move(def))) {
  if (def_->dim <= 0) fail(ErrorKind::DimensionMismatch, "diffeo dimension must be positive");
}

bool Diffeo::in_domain(const Point& x) const {
  if (x.size() != dim()) return false;
  return !def_->in_domain || def_->in_domain(x);
}

bool Diffeo::in_range(const Point& y) const {
  if (y.size() != dim()) return false;
  return !def_->in_range || def_->in_range(y);
}

bool Diffeo::box_ok(const Box& b) const {
  if (b.dim() != dim()) return false;
  if (def_->box_ok) return def_->box_ok(b);
  return in_domain(b.lo) && in_domain(b.hi);
}

Point Diffeo::apply(const Point& x) const {
  check_dim(x, dim(), name());
  if (!in_domain(x)) fail(ErrorKind::DomainError, name() + ": point outside domain");
  return def_->fwd(x);
}

Point Diffeo::invert(const Point& y) const {
  check_dim(y, dim(), name());
  if (!in_range(y)) fail(ErrorKind::DomainError, name() + ": point outside range");
  return def_->inv(y);
}

double Diffeo::fd_jac_det_abs(const Point& x) const {
  Point h(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    h[i] = 1e-6 * (1.0 + std::abs(x[i]));
    Point a = x, b = x;
    a[i] -= h[i];
    b[i] += h[i];
    if (!in_domain(a) || !in_domain(b)) {
      fail(ErrorKind::DomainError, name() + ": finite-difference stencil leaves domain");
    }
  }
  const Matrix J = fd_jacobian([this](const Point& p) { return def_->fwd(p); }, x);
  return std::abs(J.determinant());
}

double Diffeo::jac_det_abs(const Point& x) const {
  check_dim(x, dim(), name());
  if (!in_domain(x)) fail(ErrorKind::DomainError, name() + ": point outside domain");
  const double j = def_->jac ? std::abs(def_->jac(x)) : fd_jac_det_abs(x);
  if (!(j >= kSingular)) fail(ErrorKind::SingularJacobian, name() + ": |det J| below 1e-14");
  return j;
}

double Diffeo::inv_jac_det_abs(const Point& y) const {
  if (!def_->inv_jac) return inverse().jac_det_abs(y);
  check_dim(y, dim(), name());
  if (!in_range(y)) fail(ErrorKind::DomainError, name() + ": point outside range");
  const double j = std::abs(def_->inv_jac(y));
  if (!(j >= kSingular)) fail(ErrorKind::SingularJacobian, name() + ": |det J| below 1e-14");
  return j;
}

std::optional<Box> Diffeo::image_box(const Box& b) const {
  if (def_->image_box) return def_->image_box(b);
  if (def_->axis_monotone) return corner_image(b, def_->fwd);
  return std::nullopt;
}

Diffeo Diffeo::inverse() const {
  Def d;
  d.name = "inv(" + def_->name + ")";
  if (def_->name.rfind("inv(", 0) == 0 && def_->name.back() == ')') {
    d.name = def_->name.substr(4, def_->name.size() - 5);
  }
  d.dim = def_->dim;
  d.fwd = def_->inv;
  d.inv = def_->fwd;
  d.jac = def_->inv_jac;
  d.inv_jac = def_->jac;
  d.in_domain = def_->in_range;
  d.in_range = def_->in_domain;
  d.box_ok = def_->inv_box_ok;
  d.inv_box_ok = def_->box_ok;
  d.image_box = def_->inv_image_box;
  d.inv_image_box = def_->image_box;
  d.axis_monotone = def_->axis_monotone;
  return Diffeo(std::move(d));
}

Matrix fd_jacobian(const VectorField& map, const Point& x, double h) {
  const Eigen::Index n = x.size();
  Matrix J;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = h > 0.0 ? h : 1e-6 * (1.0 + std::abs(x[i]));
    Point a = x, b = x;
    a[i] -= hi;
    b[i] += hi;
    Point fa, fb;
    try {
      fa = map(a);
      fb = map(b);
    } catch (const AuditError& e) {
      if (e.kind() == ErrorKind::DomainError) {
        fail(ErrorKind::DomainError, "finite-difference stencil leaves domain");
      }
      throw;
    }
    if (i == 0) J.resize(fa.size(), n);
    J.col(i) = (fb - fa) / (2.0 * hi);
  }
  return J;
}

Diffeo compose(const Diffeo& a, const Diffeo& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::DimensionMismatch, "compose: dimensions differ");
  Diffeo::Def d;
  d.name = a.name() + "*" + b.name();
  d.dim = a.dim();
  d.fwd = [a, b](const Point& x) { return a.apply(b.apply(x)); };
  d.inv = [a, b](const Point& y) { return b.invert(a.invert(y)); };
  d.jac = [a, b](const Point& x) { return a.jac_det_abs(b.apply(x)) * b.jac_det_abs(x); };
  d.inv_jac = [a, b](const Point& y) {
    const Point u = a.invert(y);
    return b.inv_jac_det_abs(u) * a.inv_jac_det_abs(y);
  };
  d.in_domain = [a, b](const Point& x) {
    if (!b.in_domain(x)) return false;
    try {
      return a.in_domain(b.apply(x));
    } catch (const AuditError&) {
      return false;
    }
  };
  d.in_range = [a, b](const Point& y) {
    if (!a.in_range(y)) return false;
    try {
      return b.in_range(a.invert(y));
    } catch (const AuditError&) {
      return false;
    }
  };
  d.box_ok = [a, b](const Box& box) {
    if (!b.box_ok(box)) return false;
    auto img = b.image_box(box);
    return img ? a.box_ok(*img) : true;
  };
  d.image_box = [a, b](const Box& box) -> Box {
    auto img = b.image_box(box);
    if (!img) fail(ErrorKind::DomainError, "compose: image box not decidable");
    auto img2 = a.image_box(*img);
    if (!img2) fail(ErrorKind::DomainError, "compose: image box not decidable");
    return *img2;
  };
  const Diffeo ai = a.inverse(), bi = b.inverse();
  d.inv_image_box = [ai, bi](const Box& box) -> Box {
    auto img = ai.image_box(box);
    if (!img) fail(ErrorKind::DomainError, "compose: image box not decidable");
    auto img2 = bi.image_box(*img);
    if (!img2) fail(ErrorKind::DomainError, "compose: image box not decidable");
    return *img2;
  };
  d.inv_box_ok = [ai, bi](const Box& box) {
    if (!ai.box_ok(box)) return false;
    auto img = ai.image_box(box);
    return img ? bi.box_ok(*img) : true;
  };
  d.axis_monotone = false;
  return Diffeo(std::move(d));
}

namespace diffeos {

namespace {

bool all_nonzero(const Point& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] == 0.0) return false;
  return true;
}

bool box_avoids_zero(const Box& b) {
  for (int i = 0; i < b.dim(); ++i)
    if (!(b.lo[i] > 0.0 || b.hi[i] < 0.0)) return false;
  return true;
}

double odd_cubic_inverse(double y) {
  // real root of x^3 + 3x - 3y = 0
  const double ay = std::abs(y);
  const double s = std::sqrt(2.25 * ay * ay + 1.0);
  const double A = std::cbrt(1.5 * ay + s);
  double x = A - 1.0 / A;
  for (int k = 0; k < 2; ++k) x -= (x + x * x * x / 3.0 - ay) / (1.0 + x * x);
  return y < 0 ? -x : x;
}

}  // namespace

Diffeo identity(int dim) {
  Diffeo::Def d;
  d.name = "identity";
  d.dim = dim;
  d.fwd = [](const Point& x) { return x; };
  d.inv = [](const Point& y) { return y; };
  d.jac = [](const Point&) { return 1.0; };
  d.inv_jac = d.jac;
  d.box_ok = [](const Box&) { return true; };
  d.inv_box_ok = d.box_ok;
  d.axis_monotone = true;
  return Diffeo(std::move(d));
}

Diffeo reciprocal(int dim) {
  Diffeo::Def d;
  d.name = "reciprocal";
  d.dim = dim;
  d.fwd = [](const Point& x) -> Point { return x.cwiseInverse(); };
  d.inv = d.fwd;
  d.jac = [](const Point& x) { return 1.0 / x.cwiseAbs2().prod(); };
  d.inv_jac = d.jac;
  d.in_domain = all_nonzero;
  d.in_range = all_nonzero;
  d.box_ok = box_avoids_zero;
  d.inv_box_ok = box_avoids_zero;
  d.axis_monotone = true;
  return Diffeo(std::move(d));
}

Diffeo tan_axis0(int dim) {
  Diffeo::Def d;
  d.name = "tan_axis0";
  d.dim = dim;
  d.fwd = [](const Point& x) {
    Point y = x;
    y[0] = std::tan(x[0]);
    return y;
  };
  d.inv = [](const Point& y) {
    Point x = y;
    x[0] = std::atan(y[0]);
    return x;
  };
  d.jac = [](const Point& x) {
    const double c = std::cos(x[0]);
    return 1.0 / (c * c);
  };
  d.inv_jac = [](const Point& y) { return 1.0 / (1.0 + y[0] * y[0]); };
  d.in_domain = [](const Point& x) { return std::abs(x[0]) < M_PI_2; };
  d.box_ok = [](const Box& b) { return b.lo[0] > -M_PI_2 && b.hi[0] < M_PI_2; };
  d.inv_box_ok = [](const Box&) { return true; };
  d.axis_monotone = true;
  return Diffeo(std::move(d));
}

Diffeo square_axis0(int dim) {
  Diffeo::Def d;
  d.name = "square_axis0";
  d.dim = dim;
  d.fwd = [](const Point& x) {
    Point y = x;
    y[0] = x[0] * x[0];
    return y;
  };
  d.inv = [](const Point& y) {
    Point x = y;
    x[0] = std::sqrt(y[0]);
    return x;
  };
  d.jac = [](const Point& x) { return 2.0 * std::abs(x[0]); };
  d.inv_jac = [](const Point& y) { return 0.5 / std::sqrt(y[0]); };
  d.in_domain = [](const Point& x) { return x[0] >= 0.0; };
  d.in_range = [](const Point& y) { return y[0] >= 0.0; };
  d.box_ok = [](const Box& b) { return b.lo[0] >= 0.0; };
  d.inv_box_ok = d.box_ok;
  d.axis_monotone = true;
  return Diffeo(std::move(d));
}

Diffeo cubic(int dim) {
  Diffeo::Def d;
  d.name = "cubic";
  d.dim = dim;
  d.fwd = [](const Point& x) -> Point { return x.array().cube(); };
  d.inv = [](const Point& y) -> Point { return y.unaryExpr([](double v) { return std::cbrt(v); }); };
  d.jac = [](const Point& x) { return (3.0 * x.array().square()).prod(); };
  d.inv_jac = [](const Point& y) {
    return y.unaryExpr([](double v) { return 1.0 / (3.0 * std::pow(std::cbrt(v), 2)); }).prod();
  };
  d.box_ok = [](const Box&) { return true; };
  d.inv_box_ok = d.box_ok;
  d.axis_monotone = true;
  return Diffeo(std::move(d));
}

Diffeo odd_cubic(int dim) {
  Diffeo::Def d;
  d.name = "odd_cubic";
  d.dim = dim;
  d.fwd = [](const Point& x) -> Point { return x.array() + x.array().cube() / 3.0; };
  d.inv = [](const Point& y) -> Point { return y.unaryExpr([](double v) { return odd_cubic_inverse(v); }); };
  d.jac = [](const Point& x) { return (1.0 + x.array().square()).prod(); };
  d.inv_jac = [](const Point& y) {
    double j = 1.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double x = odd_cubic_inverse(y[i]);
      j /= 1.0 + x * x;
    }
    return j;
  };
  d.box_ok = [](const Box&) { return true; };
  d.inv_box_ok = d.box_ok;
  d.axis_monotone = true;
  return Diffeo(std::move(d));
}

Diffeo cart_to_spherical() {
  Diffeo::Def d;
  d.name = "cart_to_spherical";
  d.dim = 3;
  d.fwd = [](const Point& x) {
    const double rho2 = x[0] * x[0] + x[1] * x[1];
    const double r = std::sqrt(rho2 + x[2] * x[2]);
    Point s(3);
    s[0] = r;
    s[1] = std::acos(std::clamp(x[2] / r, -1.0, 1.0));
    if (rho2 < 1e-300) {
      s[2] = 0.0;  // pole convention
    } else {
      const double sgn = x[1] > 0 ? 1.0 : (x[1] < 0 ? -1.0 : 0.0);
      s[2] = sgn * std::acos(std::clamp(x[0] / std::sqrt(rho2), -1.0, 1.0));
    }
    return s;
  };
  d.inv = [](const Point& s) {
    Point x(3);
    x[0] = s[0] * std::sin(s[1]) * std::cos(s[2]);
    x[1] = s[0] * std::sin(s[1]) * std::sin(s[2]);
    x[2] = s[0] * std::cos(s[1]);
    return x;
  };
  // |d(r,theta,phi)/d(x,y,z)| = 1/(r^2 sin(theta)) = 1/(r*rho)
  d.jac = [](const Point& x) {
    const double rho = std::hypot(x[0], x[1]);
    const double r = std::sqrt(rho * rho + x[2] * x[2]);
    return 1.0 / (r * rho);
  };
  d.inv_jac = [](const Point& s) { return s[0] * s[0] * std::sin(s[1]); };
  d.in_domain = [](const Point& x) {
    const bool origin = x[0] == 0.0 && x[1] == 0.0 && x[2] == 0.0;
    const bool cut = x[1] == 0.0 && x[0] < 0.0;
    return !origin && !cut;
  };
  d.in_range = [](const Point& s) {
    return s[0] > 0.0 && s[1] >= 0.0 && s[1] <= M_PI && s[2] > -M_PI && s[2] <= M_PI;
  };
  d.axis_monotone = false;
  return Diffeo(std::move(d));
}

Diffeo hyperbolic_Trho() {
  Diffeo::Def d;
  d.name = "hyperbolic_Trho";
  d.dim = 2;
  d.fwd = [](const Point& x) {
    Point y(2);
    y[0] = 0.5 * std::log(x[0] / x[1]);
    y[1] = std::sqrt(x[0] * x[1]);
    return y;
  };
  d.inv = [](const Point& y) {
    Point x(2);
    x[0] = y[1] * std::exp(y[0]);
    x[1] = y[1] * std::exp(-y[0]);
    return x;
  };
  d.jac = [](const Point& x) { return 0.5 / std::sqrt(x[0] * x[1]); };
  d.inv_jac = [](const Point& y) { return 2.0 * y[1]; };
  d.in_domain = [](const Point& x) { return x[0] > 0.0 && x[1] > 0.0; };
  d.in_range = [](const Point& y) { return y[1] > 0.0; };
  d.box_ok = [](const Box& b) { return b.lo[0] > 0.0 && b.lo[1] > 0.0; };
  d.inv_box_ok = [](const Box& b) { return b.lo[1] > 0.0; };
  d.image_box = [](const Box& b) {
    Point lo(2), hi(2);
    lo << 0.5 * std::log(b.lo[0] / b.hi[1]), std::sqrt(b.lo[0] * b.lo[1]);
    hi << 0.5 * std::log(b.hi[0] / b.lo[1]), std::sqrt(b.hi[0] * b.hi[1]);
    return Box(lo, hi);
  };
  d.inv_image_box = [](const Box& b) {
    Point lo(2), hi(2);
    lo << b.lo[1] * std::exp(b.lo[0]), b.lo[1] * std::exp(-b.hi[0]);
    hi << b.hi[1] * std::exp(b.hi[0]), b.hi[1] * std::exp(-b.lo[0]);
    return Box(lo, hi);
  };
  d.axis_monotone = false;
  return Diffeo(std::move(d));
}

Diffeo affine(const Matrix& A, const Point& b, const std::string& name) {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    fail(ErrorKind::DimensionMismatch, "affine: A must be square and match b");
  }
  const double det = std::abs(A.determinant());
  if (det < kSingular) fail(ErrorKind::SingularJacobian, "affine: singular matrix");
  const Matrix Ainv = A.inverse();
  Diffeo::Def d;
  d.name = name;
  d.dim = static_cast<int>(A.rows());
  d.fwd = [A, b](const Point& x) -> Point { return A * x + b; };
  d.inv = [Ainv, b](const Point& y) -> Point { return Ainv * (y - b); };
  d.jac = [det](const Point&) { return det; };
  d.inv_jac = [det](const Point&) { return 1.0 / det; };
  d.box_ok = [](const Box&) { return true; };
  d.inv_box_ok = d.box_ok;
  // exact bounding box of the image parallelotope
  auto bbox = [](const Matrix& M, const Point& shift) {
    return [M, shift](const Box& x) {
      const Point c = M * x.center() + shift;
      const Point h = M.cwiseAbs() * (0.5 * x.width());
      return Box(c - h, c + h);
    };
  };
  d.image_box = bbox(A, b);
  d.inv_image_box = bbox(Ainv, -Ainv * b);
  const bool diagonal = A.isDiagonal();
  d.axis_monotone = diagonal;
  return Diffeo(std::move(d));
}

Diffeo permutation(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  std::vector<int> inv(n, -1);
  for (int i = 0; i < n; ++i) {
    if (perm[i] < 0 || perm[i] >= n || inv[perm[i]] != -1) {
      fail(ErrorKind::DomainError, "permutation: not a permutation");
    }
    inv[perm[i]] = i;
  }
  auto apply_perm = [](const std::vector<int>& p) {
    return [p](const Point& x) {
      Point y(x.size());
      for (size_t i = 0; i < p.size(); ++i) y[static_cast<Eigen::Index>(i)] = x[p[i]];
      return y;
    };
  };
  Diffeo::Def d;
  d.name = "permutation";
  d.dim = n;
  d.fwd = apply_perm(perm);
  d.inv = apply_perm(inv);
  d.jac = [](const Point&) { return 1.0; };
  d.inv_jac = d.jac;
  d.box_ok = [](const Box&) { return true; };
  d.inv_box_ok = d.box_ok;
  auto fwd = d.fwd, bwd = d.inv;
  d.image_box = [fwd](const Box& b) { return Box(fwd(b.lo), fwd(b.hi)); };
  d.inv_image_box = [bwd](const Box& b) { return Box(bwd(b.lo), bwd(b.hi)); };
  d.axis_monotone = false;
  return Diffeo(std::move(d));
}

}  // namespace diffeos

const std::vector<std::string>& diffeo_ids() {
  static const std::vector<std::string> ids = {"identity",     "reciprocal",        "tan_axis0",
                                               "square_axis0", "cart_to_spherical", "hyperbolic_Trho",
                                               "cubic",        "odd_cubic"};
  return ids;
}

Diffeo diffeo_from_id(const std::string& id, int dim) {
  if (id == "identity") return diffeos::identity(dim);
  if (id == "reciprocal") return diffeos::reciprocal(dim);
  if (id == "tan_axis0") return diffeos::tan_axis0(dim);
  if (id == "square_axis0") return diffeos::square_axis0(dim);
  if (id == "cubic") return diffeos::cubic(dim);
  if (id == "odd_cubic") return diffeos::odd_cubic(dim);
  if (id == "cart_to_spherical") {
    if (dim != 3) fail(ErrorKind::DimensionMismatch, "cart_to_spherical is 3-dimensional");
    return diffeos::cart_to_spherical();
  }
  if (id == "hyperbolic_Trho") {
    if (dim != 2) fail(ErrorKind::DimensionMismatch, "hyperbolic_Trho is 2-dimensional");
    return diffeos::hyperbolic_Trho();
  }
  fail(ErrorKind::ValidationError, "unknown diffeo id '" + id + "'");
}

}  // namespace bkaudit
