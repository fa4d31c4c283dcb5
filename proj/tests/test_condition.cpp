#include <cmath>
#include <random>

#include "bkaudit/condition.hpp"
#include "bkaudit/errors.hpp"
#include "doctest.h"

using namespace bkaudit;

namespace {

std::vector<double> midpoints(const Interval& iv, int n) {
  std::vector<double> out;
  const double h = iv.length() / n;
  for (int i = 0; i < n; ++i) out.push_back(iv.lo + (i + 0.5) * h);
  return out;
}

double at(const Density& c, double t) { return c(make_point({t})); }

// least-squares slope of log c against log t
double loglog_slope(const Density& c, const std::vector<double>& ts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(ts.size());
  for (double t : ts) {
    const double x = std::log(t), y = std::log(at(c, t));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("forward models") {
  Matrix G(3, 2);
  G << 2, 1, 4, 2, 1, 0;
  const ForwardModel f = linear_forward(G);
  CHECK(f.is_linear());
  const Point d = f(make_point({1.0, 2.0}));
  CHECK(d[0] == 4.0);
  CHECK(d[2] == 1.0);
  CHECK_THROWS_AS(f(make_point({1.0})), AuditError);
  const ForwardModel fr = in_model_coords(f, diffeos::reciprocal(2));
  CHECK((fr(make_point({0.5, 0.25})) - f(make_point({2.0, 4.0}))).norm() < 1e-15);
}

TEST_CASE("graph posterior") {
  const TomographyCase tc;
  const Density pd = densities::uniform_box(tc.data_box);
  const Density pv = densities::uniform_box(tc.v_box);
  const ForwardModel gv = after(linear_forward(tc.G), diffeos::reciprocal(2));
  const Density post = graph_posterior(pd, pv, gv);
  const double k = post(make_point({1.4, 1.45}));
  CHECK(k > 0.0);
  CHECK(post(make_point({1.45, 1.38})) == k);
  CHECK(post(make_point({1.2, 1.2})) == 0.0);   // data outside the box
  CHECK(post(make_point({2.5, 1.4})) == 0.0);   // outside the velocity box

  const Density zero("zero", tc.v_box, [](const Point&) { return 0.0; });
  const Density z = graph_posterior(pd, zero, gv);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (int i = 0; i < 50; ++i) CHECK(z(make_point({u(rng), u(rng)})) == 0.0);
  CHECK_THROWS_AS(graph_posterior(densities::uniform_box(Box::unit(3)), pv, gv), AuditError);
}

TEST_CASE("full-space posterior is reparameterization consistent") {
  const TomographyCase tc;
  const Density pd = densities::gaussian_diag(make_point({1.4, 0.7}), make_point({0.05, 0.03}));
  const Density pv = densities::lognormal_product(make_point({0.35, 0.35}), make_point({0.2, 0.2}));
  const ForwardModel gv = after(linear_forward(tc.G), diffeos::reciprocal(2));
  for (const std::string id : {"reciprocal", "cubic", "square_axis0"}) {
    const Diffeo t = diffeo_from_id(id, 2);
    const Density a = pushforward(graph_posterior(pd, pv, gv), t);
    const Density b = graph_posterior(pd, pushforward(pv, t), in_model_coords(gv, t));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(1.1, 1.9);
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
      const Point y = t.apply(make_point({u(rng), u(rng)}));
      const double va = a(y), vb = b(y);
      if (va == 0.0 && vb == 0.0) continue;
      worst = std::max(worst, std::abs(va - vb) / std::max(va, vb));
    }
    INFO(id);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("naive conditionals along v2 = v1") {
  const TomographyConditionals tcs = tomography_conditionals();
  CHECK(std::abs(tcs.feasible.lo - 1.35) < 1e-12);
  CHECK(std::abs(tcs.feasible.hi - 1.5) < 1e-12);
  const auto grid = midpoints(tcs.feasible, 200);
  double mx = 0, mn = 1e300;
  for (double t : grid) {
    mx = std::max(mx, at(tcs.velocity_route, t));
    mn = std::min(mn, at(tcs.velocity_route, t));
  }
  CHECK(mx / mn - 1.0 < 1e-9);
  CHECK(std::abs(mn - 1.0 / 0.15) < 1e-5);   // normalized constant
  CHECK(std::abs(loglog_slope(tcs.slowness_route, grid) - 2.0) < 1e-3);
  // normalized v^2 on the segment
  const double z = (std::pow(1.5, 3) - std::pow(1.35, 3)) / 3.0;
  CHECK(std::abs(at(tcs.slowness_route, 1.4) - 1.4 * 1.4 / z) < 1e-5);
  CHECK(at(tcs.velocity_route, 1.6) == 0.0);
  CHECK(at(tcs.slowness_route, 1.3) == 0.0);
}

TEST_CASE("naive conditional of a product along an axis line") {
  const Density p = product({densities::gaussian_diag(make_point({0.5}), make_point({0.2})),
                             densities::gaussian_diag(make_point({-1.0}), make_point({0.7}))});
  const AffineLine line{make_point({0.0, -0.6}), make_point({1.0, 0.0})};
  const Density c = restrict_to_affine(p, line);
  const Density f = densities::gaussian_diag(make_point({0.5}), make_point({0.2}));
  for (double t : {-0.5, 0.1, 0.5, 0.77, 1.4}) {
    CHECK(std::abs(at(c, t) - at(f, t)) < 1e-9);
  }
  const AffineLine miss{make_point({0.0, 40.0}), make_point({1.0, 0.0})};
  CHECK_THROWS_AS(restrict_to_affine(p, miss), AuditError);
}

TEST_CASE("tube-limit conditionals depend on the thickening coordinates") {
  const Density u = densities::uniform_box(Box(make_point({0.5, 0.5}), make_point({4.0, 4.0})));
  const AffineLine diag{make_point({0.0, 0.0}), make_point({1.0, 1.0})};
  const Interval range{1.2, 1.8};
  const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
  QuadratureSpec q;
  q.engine = Engine::tensor_gauss;
  q.rel_tol = 1e-10;

  const Density cv = tube_limit_conditional(u, diag, range, diffeos::identity(2), eps, q);
  const Density cs = tube_limit_conditional(u, diag, range, diffeos::reciprocal(2), eps, q);
  const double v0 = at(cv, 1.2);
  double worst_v = 0, worst_s = 0;
  const double s0 = at(cs, 1.5) / (1.5 * 1.5);
  for (int i = 0; i <= 12; ++i) {
    const double t = std::min(1.2 + 0.05 * i, 1.8);
    worst_v = std::max(worst_v, std::abs(at(cv, t) / v0 - 1.0));
    worst_s = std::max(worst_s, std::abs(at(cs, t) / (s0 * t * t) - 1.0));
  }
  CHECK(worst_v < 1e-9);
  CHECK(worst_s < 3e-3);
  CHECK(disagreement_score(cv, cs, range, 50, q) > 0.01);

  // brute-force oracle: mass of the slowness-space tube over a short stretch
  // of the line, ratio between two stretches at a single eps
  auto stretch_mass = [&](double t0, double t1, double e) {
    ScalarField f = [&](const Point& y) {
      // y = (along, across) in slowness space around the image line s2 = s1
      const Point s = make_point({(y[0] - y[1]) / std::sqrt(2.0), (y[0] + y[1]) / std::sqrt(2.0)});
      const Point v = s.cwiseInverse();
      return u(v) / (s[0] * s[0] * s[1] * s[1]);
    };
    const double a0 = std::sqrt(2.0) / t1, a1 = std::sqrt(2.0) / t0;
    return integrate(f, Box(make_point({a0, -e}), make_point({a1, e})), q).value;
  };
  const double ratio = stretch_mass(1.7, 1.72, 0.025) / stretch_mass(1.3, 1.32, 0.025);
  const double expect = (std::pow(1.72, 3) - std::pow(1.7, 3)) / (std::pow(1.32, 3) - std::pow(1.3, 3));
  CHECK(std::abs(ratio / expect - 1.0) < 3e-3);

  // independent product, thickening along the other axis: exact factor
  const Density p = product({densities::gaussian_diag(make_point({0.0}), make_point({1.0})),
                             densities::gaussian_diag(make_point({0.0}), make_point({1.0}))});
  const AffineLine axis{make_point({0.0, 0.3}), make_point({1.0, 0.0})};
  const Density ct = tube_limit_conditional(p, axis, Interval{-2.0, 2.0}, diffeos::identity(2), eps, q);
  const double r0 = at(ct, 0.0);
  for (double t : {-1.5, -0.4, 0.8, 1.9}) CHECK(std::abs(at(ct, t) / r0 - std::exp(-0.5 * t * t)) < 1e-9);

  // a tube straddling a jump cannot settle
  CHECK_THROWS_AS(tube_limit_value(u, diag, 0.51, diffeos::identity(2), eps, q), AuditError);
}

TEST_CASE("disagreement score") {
  const Interval seg{1.35, 1.5};
  const Box b(make_point({1.35}), make_point({1.5}));
  const Density flat("flat", b, [](const Point&) { return 1.0; });
  const Density flat2("flat2", b, [](const Point&) { return 1.0 + 1e-12; });
  const Density sq("sq", b, [](const Point& v) { return v[0] * v[0]; });
  CHECK(disagreement_score(flat, flat, seg) == 0.0);
  CHECK(disagreement_score(flat, flat2, seg) < 1e-10);
  const double z = (std::pow(1.5, 3) - std::pow(1.35, 3)) / 3.0;
  // extreme grid point is the first midpoint
  const double t0 = 1.35 + 0.5 * 0.15 / 200;
  const double expect = std::log(z / (0.15 * t0 * t0));
  const double got = disagreement_score(flat, sq, seg);
  CHECK(got > 0.01);
  CHECK(std::abs(got - expect) < 1e-8);

  const TomographyConditionals tcs = tomography_conditionals();
  CHECK(disagreement_score(tcs.velocity_route, tcs.slowness_route, tcs.feasible) > 0.01);
}

TEST_CASE("axis-aligned rescaling leaves the naive conditional unchanged") {
  const Density p = product({densities::gaussian_diag(make_point({0.4}), make_point({0.3})),
                             densities::lognormal_product(make_point({0.0}), make_point({0.5}))});
  const AffineLine line{make_point({0.0, 1.2}), make_point({1.0, 0.0})};
  const Density direct = restrict_to_affine(p, line);
  Matrix S(2, 2);
  S << 2.0, 0.0, 0.0, 3.0;
  const Diffeo t = diffeos::affine(S, make_point({0.0, 0.0}), "scale");
  const Density pt = pushforward(p, t);
  const AffineLine image{make_point({0.0, 3.6}), make_point({2.0, 0.0})};
  const Density via = restrict_to_affine(pt, image);
  const Interval dom{-0.5, 1.3};
  CHECK(disagreement_score(direct, via, dom) < 1e-6);
}
