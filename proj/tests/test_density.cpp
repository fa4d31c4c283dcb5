#include <cmath>
#include <random>

#include "bkaudit/density.hpp"
#include "bkaudit/errors.hpp"
#include "doctest.h"

using namespace bkaudit;

namespace {

QuadratureSpec adaptive(double rel = 1e-7, std::int64_t budget = 20'000'000) {
  QuadratureSpec q;
  q.engine = Engine::adaptive_subdivision;
  q.rel_tol = rel;
  q.abs_tol = 1e-12;
  q.max_evals = budget;
  return q;
}

double mass(const Density& p, const QuadratureSpec& q) {
  ScalarField f = [&](const Point& x) { return p(x); };
  return integrate(f, p.support(), q).value;
}

Point draw(std::mt19937_64& rng, const Box& b) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * u(rng);
  return x;
}

}  // namespace

TEST_CASE("family evaluations") {
  const Density u = densities::uniform_box(Box::unit(2));
  CHECK(u(make_point({0.5, 0.5})) == 1.0);
  CHECK(u(make_point({1.5, 0.5})) == 0.0);
  CHECK(u(make_point({1.0, 0.0})) == 1.0);  // boundary counts as inside
  const Density cube = densities::uniform_box(Box::cube(make_point({3.1, 5.8, 1.1}), 0.4));
  CHECK(cube(make_point({3.1, 5.8, 1.1})) == doctest::Approx(1.953125).epsilon(1e-14));
  const Density ln = densities::lognormal_product(make_point({1, 1}), make_point({1, 1}));
  CHECK(ln(make_point({1, 1})) == doctest::Approx(std::exp(-1.0) / (2 * M_PI)).epsilon(1e-14));
  CHECK(std::abs(ln(make_point({1, 1})) - 0.058550) < 5e-7);
  CHECK(ln.evaluate(make_point({1, 1})).normalized);
  const Density raw("raw", Box::unit(1), [](const Point&) { return 2.0; });
  CHECK_FALSE(raw.evaluate(make_point({0.3})).normalized);
}

TEST_CASE("pushforward of uniform velocities to slowness") {
  const Density pv = densities::uniform_box(Box(make_point({1, 1}), make_point({2, 2})));
  const Density ps = pushforward(pv, diffeos::reciprocal(2));
  CHECK(ps.support().lo[0] == 0.5);
  CHECK(ps.support().hi[1] == 1.0);
  for (double s1 : {0.55, 0.7, 0.95}) {
    for (double s2 : {0.51, 0.8}) {
      CHECK(ps(make_point({s1, s2})) == doctest::Approx(1.0 / (s1 * s1 * s2 * s2)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(pushforward(densities::uniform_box(Box(make_point({-1}), make_point({1}))),
                              diffeos::reciprocal(1)),
                  AuditError);
  CHECK_THROWS_AS(pushforward(densities::uniform_box(Box::unit(3)), diffeos::cart_to_spherical()),
                  AuditError);
}

TEST_CASE("pushforward under identity and round trip") {
  std::mt19937_64 rng(3);
  const Density g = densities::gaussian_diag(make_point({0.2, -0.1}), make_point({0.3, 0.5}));
  const Density gi = pushforward(g, diffeos::identity(2));
  for (int k = 0; k < 100; ++k) {
    const Point x = draw(rng, Box(make_point({-1, -1}), make_point({1, 1})));
    CHECK(gi(x) == g(x));
  }
  const Density ln = densities::lognormal_product(make_point({0, 0.2}), make_point({0.3, 0.4}));
  for (const std::string id : {"reciprocal", "square_axis0", "cubic", "odd_cubic", "hyperbolic_Trho"}) {
    const Diffeo t = diffeo_from_id(id, 2);
    const Density there = pushforward(ln, t);
    const Density back = pushforward(there, t.inverse(), ln.support());
    double worst = 0;
    for (int k = 0; k < 200; ++k) {
      const Point x = draw(rng, Box(make_point({0.5, 0.5}), make_point({2.5, 2.5})));
      worst = std::max(worst, std::abs(back(x) - ln(x)) / ln(x));
    }
    INFO(id);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("pushforward_along matches pushforward at the image point") {
  const Density cube = densities::uniform_box(Box(make_point({0.2, 0.1, 0.5}), make_point({1, 1, 1})));
  const Diffeo s = diffeos::cart_to_spherical();
  const Box img(make_point({0.5, 0, 0}), make_point({2, M_PI / 2, M_PI / 2}));
  const Density q = pushforward(cube, s, img);
  for (const Point& x : {make_point({0.3, 0.4, 0.6}), make_point({0.9, 0.2, 0.8})}) {
    CHECK(pushforward_along(cube, s, x) == doctest::Approx(q(s.apply(x))).epsilon(1e-12));
  }
}

TEST_CASE("mass conservation under pushforward") {
  SUBCASE("gaussian under tan_axis0") {
    const Density g = densities::gaussian_diag(make_point({0.1, 0.0}), make_point({0.15, 1.0}));
    const Density q = pushforward(g, diffeos::tan_axis0(2));
    CHECK(std::abs(mass(q, adaptive(1e-6)) - 1.0) < 1e-4);
  }
  SUBCASE("registry family/diffeo pairs") {
    const Density uni = densities::uniform_box(Box(make_point({0.2, 0.3}), make_point({1.2, 1.4})));
    const Density gau = densities::gaussian_diag(make_point({0.7, 0.8}), make_point({0.06, 0.07}));
    const Density lgn = densities::lognormal_product(make_point({0, 0}), make_point({0.2, 0.25}));
    for (const Density* p : {&uni, &gau, &lgn}) {
      for (const std::string id : {"identity", "reciprocal", "tan_axis0", "square_axis0", "cubic",
                                   "odd_cubic", "hyperbolic_Trho"}) {
        const Diffeo t = diffeo_from_id(id, 2);
        if (!t.box_ok(p->support())) continue;
        const Density q = pushforward(*p, t);
        const double mp = mass(*p, adaptive(1e-5));
        const double mq = mass(q, adaptive(1e-5));
        INFO(p->name() << " " << id);
        CHECK(std::abs(mq - mp) < 1e-3);
      }
    }
  }
}

TEST_CASE("product densities") {
  const Density u1 = densities::uniform_box(Box::unit(1));
  const Density uu = product({u1, u1});
  CHECK(uu(make_point({0.3, 0.9})) == 1.0);
  CHECK(uu.uniform_level().has_value());
  const Density w = densities::uniform_box(Box(make_point({0.0}), make_point({0.8})));
  const Density www = product({w, w, w});
  CHECK(www(make_point({0.4, 0.4, 0.4})) == doctest::Approx(1.953125).epsilon(1e-14));
  // Gaussian data given m (sd lambda), Gaussian model (sd delta), unit hyper-Gaussians at 0
  const Density joint = product({densities::gaussian_diag(make_point({1}), make_point({1})),
                                 densities::gaussian_diag(make_point({1}), make_point({1})),
                                 densities::gaussian_diag(make_point({0}), make_point({1})),
                                 densities::gaussian_diag(make_point({0}), make_point({1}))});
  CHECK(joint(make_point({1, 1, 1, 1})) ==
        doctest::Approx(std::exp(-1.0) / (4 * M_PI * M_PI)).epsilon(1e-14));
}

TEST_CASE("normalize") {
  const Density raw("two", Box::unit(1), [](const Point&) { return 2.0; });
  CHECK(*normalize(raw, adaptive()).norm_const() == doctest::Approx(2.0).epsilon(1e-12));
  const Density v2("v2", Box(make_point({1.35}), make_point({1.5})), [](const Point& x) { return x[0] * x[0]; });
  const double exact = (std::pow(1.5, 3) - std::pow(1.35, 3)) / 3.0;
  CHECK(std::abs(*normalize(v2, adaptive()).norm_const() - exact) < 1e-6 * exact);
  const Density zero("zero", Box::unit(1), [](const Point&) { return 0.0; });
  CHECK_THROWS_AS(normalize(zero, adaptive()), AuditError);
}

TEST_CASE("tube density mass within the truncation budget") {
  const double s = 0.1;
  VectorField g = [](const Point& x1) { return make_point({0.5 + 0.15 * std::sin(2 * M_PI * x1[0])}); };
  const Density tube = densities::tube(2, 1, g, s, 1.0);
  QuadratureSpec q = adaptive(1e-8);
  const double m = mass(tube, q);
  CHECK(std::abs(m - 1.0) < 2e-3);
  // importance-sampling oracle: x1 uniform, x2 from the tube's own gaussian;
  // the weight is 1 inside the box, 0 outside
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, s);
  const int N = 1'000'000;
  int inside = 0;
  for (int i = 0; i < N; ++i) {
    const double x1 = u(rng);
    const double x2 = g(make_point({x1}))[0] + n(rng);
    inside += (x2 >= 0.0 && x2 <= 1.0);
  }
  const double oracle = static_cast<double>(inside) / N;
  CHECK(std::abs(oracle - 1.0) < 2e-3);
  CHECK(std::abs(m - oracle) < 1e-3);
}
