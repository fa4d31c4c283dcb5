#include "bkaudit/transdim.hpp"

#include <algorithm>
#include <cmath>

#include "bkaudit/errors.hpp"

namespace bkaudit {

Matrix TransdimCase::G2() const {
  Matrix G(3, 2);
  G << 2, 1, 4, 2, 1, 0;
  return G;
}

Matrix TransdimCase::G1() const { return G2().leftCols(1); }

Density TransdimCase::data_prior() const { return densities::uniform_box(Box::cube(d_obs, sigma)); }

Polygon feasible_region_k2(const TransdimCase& tc) {
  const double d1 = tc.d_obs[0], d2 = tc.d_obs[1], d3 = tc.d_obs[2], s = tc.sigma;
  Polygon p{Vec2((d1 - s) / 2, d3 - s), Vec2((d2 + s) / 4, d3 - s), Vec2((d2 - 2 * d3 - s) / 4, d3 + s),
            Vec2((d1 - d3 - 2 * s) / 2, d3 + s)};
  if (polygon_area(p) < 1e-14) fail(ErrorKind::DegeneratePolygon, "k=2 feasible parallelogram has no area");
  return p;
}

Interval feasible_segment_k1(const TransdimCase& tc) {
  const Matrix G = tc.G1();
  Interval iv{-INFINITY, INFINITY};
  for (int i = 0; i < 3; ++i) {
    const double a = (tc.d_obs[i] - tc.sigma) / G(i, 0), b = (tc.d_obs[i] + tc.sigma) / G(i, 0);
    iv.lo = std::max(iv.lo, std::min(a, b));
    iv.hi = std::min(iv.hi, std::max(a, b));
  }
  if (iv.hi < iv.lo) fail(ErrorKind::EmptyIntersection, "no m1 fits all three data");
  return iv;
}

namespace {

double flat_level(const TransdimCase& tc) { return tc.data_prior()(tc.d_obs); }

void check_k(int k) {
  if (k != 1 && k != 2) fail(ErrorKind::ValidationError, "k must be 1 or 2");
}

}  // namespace

EvidenceResult evidence_cartesian(const TransdimCase& tc, int k) {
  check_k(k);
  if (k == 1) {
    const Density pm = densities::uniform_box(Box(make_point({0.0}), make_point({tc.dm})));
    return evidence(tc.data_prior(), pm, linear_forward(tc.G1(), "G1"), {}, "k=1");
  }
  EvidenceResult out;
  out.hyper_label = "k=2";
  out.method = "polytope";
  out.value = integrate_indicator_polytope(flat_level(tc) / (tc.dm * tc.dm), feasible_region_k2(tc));
  return out;
}

double spherical_likelihood(const TransdimCase& tc, int k, const Point& m) {
  check_k(k);
  if (m.size() != k) fail(ErrorKind::DimensionMismatch, "spherical likelihood: model dimension");
  if (k == 1) {
    const Interval iv = feasible_segment_k1(tc);
    if (m[0] < iv.lo || m[0] > iv.hi) return 0.0;
  } else if (!point_in_convex_polygon(feasible_region_k2(tc), Vec2(m[0], m[1]), 1e-12)) {
    return 0.0;
  }
  static const Diffeo S = diffeos::cart_to_spherical();
  const Point d = (k == 1 ? tc.G1() : tc.G2()) * m;
  // density of S(d) at S(G m): flat level divided by |det dS/dd|
  return flat_level(tc) / S.jac_det_abs(d);
}

double spherical_likelihood_algebraic(const TransdimCase& tc, const Point& m) {
  const double x = 2 * m[0] + m[1], y = 4 * m[0] + 2 * m[1], z = m[0];
  return std::sqrt((x * x + y * y + z * z) * (x * x + y * y)) / std::pow(2 * tc.sigma, 3);
}

EvidenceResult evidence_spherical(const TransdimCase& tc, int k, const QuadratureSpec& q) {
  check_k(k);
  q.validate();
  EvidenceResult out;
  out.engine = q;
  out.hyper_label = "k=" + std::to_string(k);
  if (k == 1) {
    const Interval iv = feasible_segment_k1(tc);
    out.method = "interval";
    out.value = 2 * std::sqrt(105.0) * (std::pow(iv.hi, 3) - std::pow(iv.lo, 3)) / 3.0 /
                (std::pow(2 * tc.sigma, 3) * tc.dm);
    return out;
  }
  const Polygon P = feasible_region_k2(tc);
  const Vec2 a = P[1] - P[0], b = P[3] - P[0];
  const double jac = std::abs(a.x() * b.y() - a.y() * b.x());
  ScalarField f = [&](const Point& uv) {
    const Vec2 m = P[0] + uv[0] * a + uv[1] * b;
    return spherical_likelihood(tc, 2, make_point({m.x(), m.y()})) * jac;
  };
  const IntegrationResult r = integrate(f, Box::unit(2), q);
  const double prior = 1.0 / (tc.dm * tc.dm);
  out.method = "quadrature";
  out.value = r.value * prior;
  out.err_est = r.err_est * prior;
  out.budget_exceeded = r.budget_exceeded;
  return out;
}

EvidenceResult evidence_spherical_k2_direct(const TransdimCase& tc, const QuadratureSpec& q) {
  q.validate();
  const Polygon P = feasible_region_k2(tc);
  ScalarField f = [&](const Point& m) { return spherical_likelihood(tc, 2, m); };
  EvidenceResult out;
  out.engine = q;
  out.hyper_label = "k=2";
  out.method = "quadrature";
  const double prior = 1.0 / (tc.dm * tc.dm);
  for (const Polygon& tri : {Polygon{P[0], P[1], P[2]}, Polygon{P[0], P[2], P[3]}}) {
    const IntegrationResult r = integrate_polygon(f, tri, q);
    out.value += r.value * prior;
    out.err_est += r.err_est * prior;
    out.budget_exceeded = out.budget_exceeded || r.budget_exceeded;
  }
  return out;
}

ClosedFormCheck spherical_k2_closed_form() {
  using std::log;
  using std::sqrt;
  const double s5 = sqrt(5.0), s21 = sqrt(21.0), s105 = sqrt(105.0), s241 = sqrt(241.0);
  const double la[4] = {21 * sqrt(409.0) - 92 * s21, 21 * sqrt(541.0) - 106 * s21, 106 * s21 + 21 * sqrt(541.0),
                        92 * s21 + 21 * sqrt(409.0)};
  const double lb[2] = {101 * sqrt(3.0) + 3 * sqrt(3407.0), 21 * sqrt(29.0) + 113};
  ClosedFormCheck c;
  c.log_args_positive = std::all_of(std::begin(la), std::end(la), [](double v) { return v > 0; }) &&
                        lb[0] > 0 && lb[1] > 0;
  if (!c.log_args_positive) fail(ErrorKind::DomainError, "closed form: non-positive log argument");

  const double as_args[4] = {132 * s5 / 107, 1033 * s5 / 642, 1157 * s5 / 706, 458 * s5 / 353};
  double as_lib[4], as_log[4];
  for (int i = 0; i < 4; ++i) {
    as_lib[i] = std::asinh(as_args[i]);
    as_log[i] = log(as_args[i] + sqrt(as_args[i] * as_args[i] + 1));
    c.asinh_two_way_diff = std::max(c.asinh_two_way_diff, std::abs(as_lib[i] - as_log[i]));
  }

  const double t1 = (20312711127.0 * sqrt(409.0 / 5) - 30579261939.0 * sqrt(541.0 / 5)) / 14229845000.0;
  const double t2 = (47479907867.0 * sqrt(203.0 / 15) - 1620870691.0 * sqrt(23849.0 / 5)) / 3484860000.0;
  const double t3 = 1507 * (log(la[0]) - log(la[1])) / (88200 * s105);
  const double t4 = 8429 * (log(la[2]) - log(la[3])) / (352800 * s105);
  const double t5 = 31852343043.0 * (as_lib[0] - as_lib[1]) / (4646480000.0 * s241);
  const double t6 = 46582208643.0 * (as_lib[2] - as_lib[3]) / (4646480000.0 * s241);
  const double inner = log(7.0) / 14400 + log(7.0 / 3) / 28800 - log(1029.0) / 28800 +
                       (log(lb[0]) - log(lb[1])) / 7200 +
                       (std::atanh(113 / (21 * sqrt(29.0))) + std::atanh(92 / sqrt(8589.0)) -
                        std::atanh(101 / sqrt(10221.0)) - std::atanh(106 / sqrt(11361.0))) /
                           9600;
  const double t7 = 7 * sqrt(7.0 / 15) * inner;
  c.value = t1 + t2 + t3 + t4 + t5 + t6 + t7;
  return c;
}

TransdimFlip transdim_flip(const TransdimCase& tc, const QuadratureSpec& q) {
  TransdimFlip f;
  f.cartesian = bayes_factor(evidence_cartesian(tc, 2), evidence_cartesian(tc, 1));
  f.spherical = bayes_factor(evidence_spherical(tc, 2, q), evidence_spherical(tc, 1, q));
  f.flip = f.cartesian.favored == "k=2" && f.spherical.favored == "k=1";
  return f;
}

namespace {

// grid over the unit square of the parallelogram, then shrinking pattern search
double max_over_parallelogram(const Polygon& P, const std::function<double(const Point&)>& L) {
  const Vec2 a = P[1] - P[0], b = P[3] - P[0];
  auto at = [&](double u, double v) {
    const Vec2 m = P[0] + u * a + v * b;
    return L(make_point({m.x(), m.y()}));
  };
  constexpr int n = 200;
  double bu = 0, bv = 0, best = -1;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const double v = at(double(i) / n, double(j) / n);
      if (v > best) best = v, bu = double(i) / n, bv = double(j) / n;
    }
  for (double h = 1.0 / n; h > 1e-12; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [du, dv] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}) {
        const double u = std::clamp(bu + du, 0.0, 1.0), v = std::clamp(bv + dv, 0.0, 1.0);
        const double val = at(u, v);
        if (val > best) best = val, bu = u, bv = v, moved = true;
      }
    }
  }
  return best;
}

double max_over_segment(const Interval& iv, const std::function<double(double)>& L) {
  constexpr int n = 2000;
  double bx = iv.lo, best = -1;
  for (int i = 0; i <= n; ++i) {
    const double x = iv.lo + iv.length() * i / n;
    if (L(x) > best) best = L(x), bx = x;
  }
  for (double h = iv.length() / n; h > 1e-14; h *= 0.5) {
    for (double x : {std::clamp(bx - h, iv.lo, iv.hi), std::clamp(bx + h, iv.lo, iv.hi)})
      if (L(x) > best) best = L(x), bx = x;
  }
  return best;
}

}  // namespace

AicComparison transdim_aic(const TransdimCase& tc, const std::string& parameterization) {
  AicComparison out;
  const Polygon P = feasible_region_k2(tc);
  const Interval L1 = feasible_segment_k1(tc);
  if (parameterization == "cart") {
    const double level = flat_level(tc);
    out.max_like_k1 = max_over_segment(L1, [&](double) { return level; });
    out.max_like_k2 = max_over_parallelogram(P, [&](const Point&) { return level; });
  } else if (parameterization == "sph") {
    out.max_like_k1 = max_over_segment(L1, [&](double x) { return spherical_likelihood(tc, 1, make_point({x})); });
    out.max_like_k2 = max_over_parallelogram(P, [&](const Point& m) { return spherical_likelihood(tc, 2, m); });
  } else {
    fail(ErrorKind::ValidationError, "parameterization must be cart or sph");
  }
  out.aic_k1 = aic(1, out.max_like_k1);
  out.aic_k2 = aic(2, out.max_like_k2);
  out.preferred = out.aic_k1 <= out.aic_k2 ? 1 : 2;
  return out;
}

}  // namespace bkaudit
