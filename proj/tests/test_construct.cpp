#include <cmath>
#include <random>

#include "bkaudit/construct.hpp"
#include "bkaudit/errors.hpp"
#include "doctest.h"

using namespace bkaudit;

namespace {

QuadratureSpec tight() {
  QuadratureSpec q;
  q.engine = Engine::adaptive_subdivision;
  q.rel_tol = 1e-9;
  q.abs_tol = 1e-12;
  return q;
}

TubeSpec line_tube(double sigma, double A = 1.0) {
  TubeSpec t;
  t.n = 2;
  t.k = 1;
  t.g = [](const Point& x) { return make_point({0.5 + 0.2 * (x[0] - 0.5)}); };
  t.sigma = sigma;
  t.amplitude = A;
  return t;
}

Density uv4() {
  return Density("4uv", Box::unit(2), [](const Point& u) { return 4.0 * u[0] * u[1]; }, 1.0);
}

}  // namespace

TEST_CASE("tube widths") {
  CHECK(std::abs(sigma_for_value(2, 1, 1.0, 1.0 / std::sqrt(2 * M_PI)) - 1.0) < 1e-14);
  CHECK(std::abs(sigma_for_value(3, 1, 1.0, 1.0 / (2 * M_PI)) - 1.0) < 1e-14);
  CHECK(std::abs(sigma_for_evidence(2, 1, 1.0, 1.0, 1.0) - 1.0 / std::sqrt(2 * M_PI)) < 1e-14);
  CHECK_THROWS_AS(sigma_for_value(2, 1, -1.0, 1.0), AuditError);

  // on-manifold value is c at 100 points
  for (double c : {0.3, 2.0, 17.5}) {
    TubeSpec t = line_tube(1.0, 1.3);
    t.sigma = sigma_for_value(2, 1, t.amplitude, c);
    const Density p = tube_density(t);
    for (int i = 0; i < 100; ++i) {
      const double x = (i + 0.5) / 100;
      CHECK(std::abs(p(make_point({x, t.g(make_point({x}))[0]})) / c - 1.0) < 1e-12);
    }
  }
  // codimension 2
  TubeSpec t3;
  t3.n = 3;
  t3.k = 1;
  t3.g = [](const Point& x) { return make_point({0.4 + 0.1 * x[0], 0.6 - 0.2 * x[0]}); };
  t3.amplitude = 0.7;
  t3.sigma = sigma_for_value(3, 1, 0.7, 5.0);
  const Density p3 = tube_density(t3);
  CHECK(std::abs(p3(make_point({0.25, 0.425, 0.55})) / 5.0 - 1.0) < 1e-12);
}

TEST_CASE("tube mass and manifold integrals") {
  const TubeSpec t = line_tube(0.05);
  CHECK(std::abs(tube_mass(t, tight()) - 1.0) < 2e-3);

  // Monte Carlo cross-check of the mass
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Density p = tube_density(t);
  double s = 0.0;
  const int N = 1000000;
  for (int i = 0; i < N; ++i) s += p(make_point({U(rng), U(rng)}));
  CHECK(std::abs(s / N - 1.0) < 5e-3);

  const double V = manifold_volume(t, tight());
  CHECK(std::abs(V - std::sqrt(1.04)) < 1e-9);
  for (double E : {0.2, 0.4, 3.0}) {
    TubeSpec te = t;
    te.sigma = sigma_for_evidence(2, 1, 1.0, V, E);
    CHECK(std::abs(tube_manifold_integral(te, tight()) / E - 1.0) < 1e-6);
  }
  TubeSpec a = t, b = t;
  a.sigma = sigma_for_evidence(2, 1, 1.0, V, 0.5);
  b.sigma = sigma_for_evidence(2, 1, 1.0, V, 1.0);
  CHECK(std::abs(tube_manifold_integral(b, tight()) / tube_manifold_integral(a, tight()) - 2.0) < 1e-6);
}

TEST_CASE("tube over the trans-dimensional image plane") {
  // unit-cube coordinates of the data box; the k=2 image is the plane
  // -2 d1 + d2 = 0, solved for d1 over (d2, d3)
  const TransdimCase tc;
  const Point lo = tc.data_prior().support().lo;
  const double side = 2 * tc.sigma;
  TubeSpec t;
  t.n = 3;
  t.k = 2;
  t.g = [lo, side](const Point& x) { return make_point({((lo[1] + side * x[0]) / 2 - lo[0]) / side}); };
  t.amplitude = 1.0;
  QuadratureSpec q = tight();
  q.rel_tol = 1e-6;
  const double V = manifold_volume(t, q);
  CHECK(V > 0.0);
  t.sigma = sigma_for_evidence(3, 2, 1.0, V, 0.234375);
  CHECK(std::abs(tube_manifold_integral(t, q) / 0.234375 - 1.0) < 0.02);
}

TEST_CASE("transport closed forms") {
  const Density u1 = densities::uniform_box(Box::unit(1));
  const Diffeo id = triangular_transport(u1, u1);
  for (double x : {0.0, 0.013, 0.25, 0.5, 0.77, 0.999, 1.0}) CHECK(std::abs(id.apply(make_point({x}))[0] - x) < 1e-9);

  const Density u2 = densities::uniform_box(Box::unit(2));
  const Diffeo id2 = triangular_transport(u2, u2);
  const Point y = id2.apply(make_point({0.3, 0.8}));
  CHECK(std::abs(y[0] - 0.3) < 1e-9);
  CHECK(std::abs(y[1] - 0.8) < 1e-9);

  const Density lin("2u", Box::unit(1), [](const Point& u) { return 2.0 * u[0]; }, 1.0);
  // 2u vanishes at 0 only; the probe grid is interior, so build on [0.0, 1]
  const Diffeo sq = triangular_transport(u1, lin);
  for (double x : {0.01, 0.2, 0.5, 0.9}) {
    CHECK(std::abs(sq.apply(make_point({x}))[0] - std::sqrt(x)) < 1e-9);
    CHECK(std::abs(sq.invert(make_point({std::sqrt(x)}))[0] - x) < 1e-9);
  }

  // affine pre-normalization of the supports
  const Density ub = densities::uniform_box(Box(make_point({2.0}), make_point({6.0})));
  const Density lb("lin", Box(make_point({-1.0}), make_point({1.0})), [](const Point& u) { return u[0] + 1.0; });
  const Diffeo ab = triangular_transport(ub, lb);
  CHECK(std::abs(ab.apply(make_point({3.0}))[0] - (2.0 * std::sqrt(0.25) - 1.0)) < 1e-9);
}

TEST_CASE("transport pushes uniform onto 4uv") {
  const Density u2 = densities::uniform_box(Box::unit(2));
  const Diffeo T = triangular_transport(u2, uv4());
  double worst = 0.0, worst_map = 0.0;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const Point u = make_point({(i + 0.5) / 50, (j + 0.5) / 50});
      const Point x = T.invert(u);
      worst_map = std::max(worst_map, std::abs(x[0] - u[0] * u[0]) + std::abs(x[1] - u[1] * u[1]));
      // density from a finite-difference Jacobian, not the telescoped one
      const double pf = u2(x) / T.fd_jac_det_abs(x);
      worst = std::max(worst, std::abs(pf - 4 * u[0] * u[1]));
    }
  }
  CHECK(worst < 5e-3);
  CHECK(worst_map < 1e-8);

  // conditional slices of the pushforward against u^2
  const Density pf = pushforward(u2, T);
  double ks = 0.0;
  for (double a : {0.1, 0.45, 0.9}) {
    auto slice = [&](double s) { return pf(make_point({a, s})); };
    const double den = gk_adaptive(slice, 0.0, 1.0, 1e-13, 1e-11).value;
    for (int k = 1; k < 20; ++k) {
      const double b = k / 20.0;
      ks = std::max(ks, std::abs(gk_adaptive(slice, 0.0, b, 1e-13, 1e-11).value / den - b * b));
    }
  }
  CHECK(ks < 1e-3);
}

TEST_CASE("transport failures") {
  const Density u1 = densities::uniform_box(Box::unit(1));
  const Density hole("hole", Box::unit(1), [](const Point& u) { return std::abs(u[0] - 0.5) < 0.1 ? 0.0 : 1.0; });
  CHECK_THROWS_AS(triangular_transport(u1, hole), AuditError);
  try {
    triangular_transport(hole, u1);
  } catch (const AuditError& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveDensity);
  }
  CHECK_THROWS_AS(triangular_transport(u1, densities::uniform_box(Box::unit(2))), AuditError);
}

TEST_CASE("split tube target") {
  auto ridge = [](const Point& y) { return 0.3 + 0.4 * y[0]; };
  const Density q = split_tube_target(2, ridge, 6.0, 0.02);
  for (double a : {0.1, 0.5, 0.95}) {
    const double r = ridge(make_point({a}));
    CHECK(std::abs(q(make_point({a, r})) - 6.0) < 1e-12);
    auto f = [&](double u) { return q(make_point({a, u})); };
    CHECK(std::abs(gk_adaptive(f, 0.0, r, 1e-13, 1e-11).value - r) < 1e-9);
    CHECK(std::abs(gk_adaptive(f, r, 1.0, 1e-13, 1e-11).value - (1.0 - r)) < 1e-9);
  }
  // ridge fixed by the transport
  const Diffeo T = triangular_transport(densities::uniform_box(Box::unit(2)), q);
  const Point y = T.apply(make_point({0.5, 0.5}));
  CHECK(std::abs(y[1] - 0.5) < 1e-8);
  CHECK(std::abs(T.jac_det_abs(make_point({0.5, 0.5})) - 1.0 / 6.0) < 1e-6);
}

TEST_CASE("any evidence through a data reparameterization") {
  const TransdimCase tc;
  QuadratureSpec q;
  q.engine = Engine::tensor_gauss;
  q.rel_tol = 1e-4;
  for (double target : {0.234375, 0.05}) {
    const AnyEvidenceResult r = any_evidence_transdim(tc, target, 1.0, q);
    CHECK(std::abs(r.base_evidence - 0.2975 / 2.048) < 1e-9);
    CHECK(r.rel_err < 0.02);
    CHECK_FALSE(r.audit.pass);
  }
}
