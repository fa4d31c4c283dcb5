#include "bkaudit/construct.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "bkaudit/errors.hpp"

namespace bkaudit {

double sigma_for_value(int n, int k, double A, double c) {
  if (!(n > k && k >= 1)) fail(ErrorKind::DimensionMismatch, "tube: need n > k >= 1");
  if (!(A > 0.0) || !(c > 0.0)) fail(ErrorKind::DomainError, "tube: A and c must be positive");
  const int m = n - k;
  return std::pow(std::pow(2.0 * M_PI, -m) * (A / c) * (A / c), 1.0 / (2.0 * m));
}

double sigma_for_evidence(int n, int k, double A, double V, double E) {
  if (!(V > 0.0) || !(E > 0.0)) fail(ErrorKind::DomainError, "tube: V and E must be positive");
  return sigma_for_value(n, k, A, E / V);
}

Density tube_density(const TubeSpec& t) { return densities::tube(t.n, t.k, t.g, t.sigma, t.amplitude); }

namespace {

double surface_element(const TubeSpec& t, const Point& x1) {
  const Matrix J = fd_jacobian(t.g, x1);
  const Matrix M = Matrix::Identity(t.k, t.k) + J.transpose() * J;
  return std::sqrt(M.determinant());
}

bool on_cube(const Point& y) { return (y.array() >= 0.0).all() && (y.array() <= 1.0).all(); }

}  // namespace

double manifold_volume(const TubeSpec& t, const QuadratureSpec& q) {
  ScalarField f = [&](const Point& x1) { return on_cube(t.g(x1)) ? surface_element(t, x1) : 0.0; };
  return integrate(f, Box::unit(t.k), q).value;
}

double tube_manifold_integral(const TubeSpec& t, const QuadratureSpec& q) {
  const Density p = tube_density(t);
  ScalarField f = [&](const Point& x1) {
    const Point x2 = t.g(x1);
    if (!on_cube(x2)) return 0.0;
    Point x(t.n);
    x << x1, x2;
    return p(x) * surface_element(t, x1);
  };
  return integrate(f, Box::unit(t.k), q).value;
}

double tube_mass(const TubeSpec& t, const QuadratureSpec& q) {
  return integrate(tube_density(t), Box::unit(t.n), q).value;
}

namespace {

// One side of a Knothe-Rosenblatt map: conditional CDFs of a density after
// mapping its support box onto the unit cube.
class KRSide {
 public:
  KRSide(const Density& p, const TransportOptions& opt) : p_(p), opt_(opt), n_(p.dim()) {
    const Box& b = p_.support();
    lo_ = b.lo;
    width_ = b.width();
    check_positive();
    build_table();
  }

  int dim() const { return n_; }
  double volume() const { return width_.prod(); }
  double total() const { return F_.back(); }  // mass over the unit cube

  Point to_unit(const Point& x) const { return (x - lo_).cwiseQuotient(width_); }
  Point from_unit(const Point& y) const { return lo_ + y.cwiseProduct(width_); }

  // normalized density in original coordinates
  double density(const Point& x) const { return p_.eval_unnorm(x) / (total() * volume()); }

  // conditional CDF of coordinate k = prefix.size() given the prefix
  double cdf(const Point& prefix, double y) const {
    if (prefix.size() == 0) return table_cdf(y);
    const double den = marginal(prefix);
    return partial(prefix, y) / den;
  }

  double quantile(const Point& prefix, double p) const {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    if (prefix.size() == 0) return table_quantile(p);
    const double den = marginal(prefix);
    auto mass = [&](double a, double b) { return partial_between(prefix, a, b) / den; };
    auto pdf = [&](double y) { return marginal(extend(prefix, y)) / den; };
    return invert(mass, pdf, p, 0.0, 1.0, 0.0, 1.0);
  }

 private:
  const Density p_;
  TransportOptions opt_;
  int n_;
  Point lo_, width_;
  std::vector<double> nodes_, F_, m1_;

  double unit_density(const Point& y) const { return p_.eval_unnorm(from_unit(y)); }

  static Point extend(const Point& prefix, double v) {
    Point out(prefix.size() + 1);
    out << prefix, v;
    return out;
  }

  // Integral over coordinate `axis`. The last axis gets fixed pieces on long
  // intervals so a narrow ridge cannot slip between the first nodes.
  double integ(const std::function<double(double)>& f, double a, double b, int axis) const {
    if (b <= a) return 0.0;
    const int pieces = axis + 1 == n_ ? std::max(1, static_cast<int>(std::ceil(4.0 * (b - a) - 1e-12))) : 1;
    double s = 0.0;
    const double h = (b - a) / pieces;
    for (int i = 0; i < pieces; ++i) {
      s += gk_adaptive(f, a + i * h, a + (i + 1) * h, opt_.inner_abs, opt_.inner_rel, 400000).value;
    }
    return s;
  }

  // integral of the density over the coordinates after the prefix
  double marginal(const Point& prefix) const {
    if (prefix.size() == n_) return unit_density(prefix);
    return integ([&](double t) { return marginal(extend(prefix, t)); }, 0.0, 1.0, static_cast<int>(prefix.size()));
  }

  double partial(const Point& prefix, double y) const { return partial_between(prefix, 0.0, y); }

  // signed integral of the next conditional's marginal over [a, b]
  double partial_between(const Point& prefix, double a, double b) const {
    auto m = [&](double t) { return marginal(extend(prefix, t)); };
    const int axis = static_cast<int>(prefix.size());
    return b >= a ? integ(m, a, b, axis) : -integ(m, b, a, axis);
  }

  void check_positive() const {
    constexpr int m = 9;
    long long total = 1;
    for (int i = 0; i < n_; ++i) total *= m;
    for (long long k = 0; k < total; ++k) {
      Point y(n_);
      long long r = k;
      for (int i = 0; i < n_; ++i, r /= m) y[i] = (static_cast<double>(r % m) + 0.5) / m;
      const double v = unit_density(y);
      if (!(v > 0.0)) fail(ErrorKind::NonPositiveDensity, p_.name() + " is not strictly positive inside its box");
    }
  }

  // first coordinate: cumulative table with cubic Hermite interpolation
  void build_table() {
    const int N = opt_.table_nodes;
    if (N < 3) fail(ErrorKind::ValidationError, "transport table needs at least 3 nodes");
    nodes_.resize(N);
    F_.assign(N, 0.0);
    m1_.resize(N);
    for (int i = 0; i < N; ++i) nodes_[i] = static_cast<double>(i) / (N - 1);
    auto m1 = [&](double t) { return marginal(make_point({t})); };
    for (int i = 0; i < N; ++i) m1_[i] = m1(nodes_[i]);
    const GaussRule& gr = gauss_legendre(5);
    for (int i = 0; i + 1 < N; ++i) {
      const double a = nodes_[i], b = nodes_[i + 1], c = 0.5 * (a + b), h = 0.5 * (b - a);
      double s = 0.0;
      for (size_t j = 0; j < gr.x.size(); ++j) s += gr.w[j] * m1(c + h * gr.x[j]);
      F_[i + 1] = F_[i] + s * h;
    }
    if (!(F_.back() > 0.0)) fail(ErrorKind::NonPositiveDensity, "zero total mass");
  }

  double hermite(int i, double y) const {
    const double h = nodes_[i + 1] - nodes_[i], t = (y - nodes_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * F_[i] + (t3 - 2 * t2 + t) * h * m1_[i] + (-2 * t3 + 3 * t2) * F_[i + 1] +
           (t3 - t2) * h * m1_[i + 1];
  }

  double hermite_slope(int i, double y) const {
    const double h = nodes_[i + 1] - nodes_[i], t = (y - nodes_[i]) / h;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * F_[i] + (3 * t2 - 4 * t + 1) * h * m1_[i] + (-6 * t2 + 6 * t) * F_[i + 1] +
            (3 * t2 - 2 * t) * h * m1_[i + 1]) /
           h;
  }

  int cell_of(double y) const {
    const int N = static_cast<int>(nodes_.size());
    return std::clamp(static_cast<int>(y * (N - 1)), 0, N - 2);
  }

  double table_cdf(double y) const {
    y = std::clamp(y, 0.0, 1.0);
    return hermite(cell_of(y), y) / total();
  }

  double table_quantile(double p) const {
    const double target = p * total();
    const int i = std::clamp(static_cast<int>(std::upper_bound(F_.begin(), F_.end(), target) - F_.begin()) - 1, 0,
                             static_cast<int>(F_.size()) - 2);
    auto mass = [&](double a, double b) { return (hermite(i, b) - hermite(i, a)) / total(); };
    auto pdf = [&](double y) { return hermite_slope(i, y) / total(); };
    return invert(mass, pdf, p, nodes_[i], nodes_[i + 1], F_[i] / total(), F_[i + 1] / total());
  }

  // Safeguarded Newton on a monotone CDF with bracket [a, b], F(a) = Fa,
  // F(b) = Fb. `mass(s, t)` is F(t) - F(s); each new value is integrated
  // from the nearer bracket end, so late steps cost little. Falls back to
  // bisection whenever a step leaves the bracket.
  double invert(const std::function<double(double, double)>& mass, const std::function<double(double)>& pdf,
                double p, double a, double b, double Fa, double Fb) const {
    double lo = a, hi = b, Flo = Fa, Fhi = Fb;
    double y = Fhi > Flo ? lo + (hi - lo) * std::clamp((p - Flo) / (Fhi - Flo), 0.0, 1.0) : 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      if (hi - lo <= opt_.inv_tol) return 0.5 * (lo + hi);
      const double Fy = (y - lo <= hi - y) ? Flo + mass(lo, y) : Fhi - mass(y, hi);
      const double r = Fy - p;
      if (r < 0) lo = y, Flo = Fy;
      else hi = y, Fhi = Fy;
      const double d = pdf(y);
      const double newton = d > 0.0 ? y - r / d : std::nan("");
      if (std::abs(newton - y) <= opt_.inv_tol && newton >= lo && newton <= hi) return newton;
      y = newton > lo && newton < hi ? newton : 0.5 * (lo + hi);
    }
    fail(ErrorKind::CDFInversionFailure, "conditional CDF inversion did not converge");
  }
};

struct KRMap {
  KRSide src, dst;
};

// u_k = Q_dst(F_src(x_k | x_<k) | u_<k)
Point kr_apply(const KRSide& from, const KRSide& to, const Point& x) {
  const int n = from.dim();
  const Point y = from.to_unit(x);
  Point u(n);
  for (int k = 0; k < n; ++k) {
    const double p = from.cdf(y.head(k), y[k]);
    u[k] = to.quantile(u.head(k), std::clamp(p, 0.0, 1.0));
  }
  return to.from_unit(u);
}

}  // namespace

Diffeo triangular_transport(const Density& f, const Density& g, const TransportOptions& opt) {
  if (f.dim() != g.dim()) fail(ErrorKind::DimensionMismatch, "transport: dimensions differ");
  if (f.dim() < 1 || f.dim() > 3) fail(ErrorKind::DimensionMismatch, "transport: dimension must be 1..3");
  auto m = std::make_shared<const KRMap>(KRMap{KRSide(f, opt), KRSide(g, opt)});
  const Box fb = f.support(), gb = g.support();
  Diffeo::Def d;
  d.name = "kr(" + f.name() + "->" + g.name() + ")";
  d.dim = f.dim();
  d.fwd = [m](const Point& x) { return kr_apply(m->src, m->dst, x); };
  d.inv = [m](const Point& u) { return kr_apply(m->dst, m->src, u); };
  // triangular Jacobian: product of conditional density ratios, which
  // telescopes to f(x) / g(T(x))
  d.jac = [m](const Point& x) { return m->src.density(x) / m->dst.density(kr_apply(m->src, m->dst, x)); };
  d.inv_jac = [m](const Point& u) { return m->dst.density(u) / m->src.density(kr_apply(m->dst, m->src, u)); };
  d.in_domain = [fb](const Point& x) { return fb.contains(x); };
  d.in_range = [gb](const Point& u) { return gb.contains(u); };
  auto inside = [](const Box& outer) {
    return [outer](const Box& b) { return outer.contains(b.lo) && outer.contains(b.hi); };
  };
  d.box_ok = inside(fb);
  d.inv_box_ok = inside(gb);
  // conservative: the image of any sub-box lies in the target box
  d.image_box = [gb](const Box&) { return gb; };
  d.inv_image_box = [fb](const Box&) { return fb; };
  return Diffeo(std::move(d));
}

namespace {

struct Side {
  double b = 0.0, w = 1.0;  // floor and bump width
};

double bump_integral(double a, double b, double r, double w) {
  const double s = w * std::sqrt(2.0);
  return w * std::sqrt(M_PI / 2.0) * (std::erf((b - r) / s) - std::erf((a - r) / s));
}

// floor b and width w on [a, e] so that b + (c - b) bump has mass `mass`
Side solve_side(double a, double e, double r, double c, double width, double mass) {
  Side s;
  const double len = e - a;
  if (len < 1e-12) return s;  // side too thin to matter
  s.w = std::min(width, 0.5 * len / std::max(c, 1.0));
  const double I = bump_integral(a, e, r, s.w);
  s.b = (mass - c * I) / (len - I);
  if (!(s.b > 0.0)) fail(ErrorKind::NonPositiveDensity, "split tube: side floor is not positive");
  return s;
}

}  // namespace

Density split_tube_target(int n, const std::function<double(const Point&)>& ridge, double c, double width) {
  if (n < 2) fail(ErrorKind::DimensionMismatch, "split tube needs n >= 2");
  if (!(c > 0.0) || !(width > 0.0)) fail(ErrorKind::DomainError, "split tube: c and width must be positive");
  ScalarField f = [n, ridge, c, width](const Point& y) {
    // nested quadrature sweeps the last coordinate at a fixed prefix, so the
    // side parameters, which depend on (r, c, width) only, are cached per
    // thread
    thread_local double key[3] = {std::nan(""), 0.0, 0.0};
    thread_local Side lower_side, upper_side;
    const double r = ridge(y.head(n - 1));
    const double u = y[n - 1];
    // lower side [0, min(r,1)] keeps mass min(r,1); upper side the rest
    const double cut = std::clamp(r, 0.0, 1.0);
    if (r != key[0] || c != key[1] || width != key[2]) {
      lower_side = solve_side(0.0, cut, r, c, width, cut);
      upper_side = solve_side(cut, 1.0, r, c, width, 1.0 - cut);
      key[0] = r, key[1] = c, key[2] = width;
    }
    const Side s = u <= cut ? lower_side : upper_side;
    const double z = (u - r) / s.w;
    return s.b + (c - s.b) * std::exp(-0.5 * z * z);
  };
  return Density("split_tube", Box::unit(n), f, 1.0);
}

AnyEvidenceResult any_evidence_transdim(const TransdimCase& tc, double target, double amplitude,
                                        const QuadratureSpec& q) {
  if (!(target > 0.0)) fail(ErrorKind::DomainError, "target evidence must be positive");
  const Matrix G = tc.G2();
  const Density pd = tc.data_prior();
  const Density pm = densities::uniform_box(Box(make_point({0.0, 0.0}), make_point({tc.dm, tc.dm})));
  const ForwardModel fm = linear_forward(G, "G2");

  AnyEvidenceResult out;
  out.target = target;
  out.base_evidence = evidence(pd, pm, fm, q, "k=2").value;
  if (!(out.base_evidence > 0.0)) fail(ErrorKind::EmptySupport, "forward image misses the data cube");
  // naive integral of a unit-level density over the image is the base
  // evidence, so the ridge value is target / base
  out.ridge_value = target / out.base_evidence;
  out.tube_sigma = sigma_for_evidence(3, 2, amplitude, out.base_evidence, target);

  // image plane n.x = c0 in unit cube coordinates x = (d - lo) / (2 sigma)
  const Eigen::Vector3d a = G.col(0), b = G.col(1);
  const Eigen::Vector3d nrm = a.cross(b);
  const Point lo = pd.support().lo;
  const double side = 2.0 * tc.sigma;
  const double c0 = -nrm.dot(Eigen::Vector3d(lo)) / side;
  int j = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(nrm[i]) > std::abs(nrm[j])) j = i;
  std::vector<int> perm;
  for (int i = 0; i < 3; ++i)
    if (i != j) perm.push_back(i);
  perm.push_back(j);
  auto ridge = [nrm, c0, perm, j](const Point& y) {
    double s = c0;
    for (int i = 0; i < 2; ++i) s -= nrm[perm[i]] * y[i];
    return s / nrm[j];
  };

  const Density target_density = split_tube_target(3, ridge, out.ridge_value, out.tube_sigma);
  const Diffeo T = triangular_transport(densities::uniform_box(Box::unit(3)), target_density);

  const Box cube = pd.support();
  auto to_y = [lo, side, perm](const Point& d) {
    const Point x = (d - lo) / side;
    return make_point({x[perm[0]], x[perm[1]], x[perm[2]]});
  };
  auto from_y = [lo, side, perm](const Point& y) {
    Point x(3);
    for (int i = 0; i < 3; ++i) x[perm[i]] = y[i];
    return Point(lo + side * x);
  };
  Diffeo::Def d;
  d.name = "any_evidence";
  d.dim = 3;
  d.fwd = [T, to_y, from_y](const Point& x) { return from_y(T.apply(to_y(x))); };
  d.inv = [T, to_y, from_y](const Point& u) { return from_y(T.invert(to_y(u))); };
  // the affine normalization and the permutation cancel in |det J|
  d.jac = [T, to_y](const Point& x) { return T.jac_det_abs(to_y(x)); };
  d.inv_jac = [T, to_y](const Point& u) { return T.inv_jac_det_abs(to_y(u)); };
  d.in_domain = [cube](const Point& x) { return cube.contains(x); };
  d.in_range = d.in_domain;
  d.box_ok = [cube](const Box& bx) { return cube.contains(bx.lo) && cube.contains(bx.hi); };
  d.inv_box_ok = d.box_ok;
  d.image_box = [cube](const Box&) { return cube; };
  d.inv_image_box = d.image_box;
  const Diffeo Td(std::move(d));

  const Polygon region = linear_feasible_polygon(G, cube.lo, cube.hi, pm.support());
  out.audit = audit_data_reparam_invariance(pd, pm, fm, Td, q, EvidenceRegion{region, std::nullopt});
  out.achieved = out.audit.transformed.value;
  out.rel_err = std::abs(out.achieved / target - 1.0);
  return out;
}

}  // namespace bkaudit
