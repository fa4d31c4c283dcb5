#include <cmath>
#include <random>

#include "bkaudit/coords.hpp"
#include "bkaudit/errors.hpp"
#include "doctest.h"

using namespace bkaudit;

namespace {

// interior sampling boxes for each registry diffeo
Box sample_box(const std::string& id, int dim) {
  if (id == "tan_axis0") return Box(Point::Constant(dim, -1.4), Point::Constant(dim, 1.4));
  if (id == "cart_to_spherical") return Box(make_point({0.2, 0.2, -2}), make_point({3, 3, 2}));
  if (id == "hyperbolic_Trho") return Box(make_point({0.1, 0.1}), make_point({5, 5}));
  if (id == "cubic") return Box(Point::Constant(dim, 0.1), Point::Constant(dim, 3));
  return Box(Point::Constant(dim, 0.1), Point::Constant(dim, 4));
}

int dim_for(const std::string& id) {
  if (id == "cart_to_spherical") return 3;
  if (id == "hyperbolic_Trho") return 2;
  return 2;
}

Point draw(std::mt19937_64& rng, const Box& b) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * u(rng);
  return x;
}

}  // namespace

TEST_CASE("apply examples") {
  const Point s = diffeos::reciprocal(2).apply(make_point({2.0, 0.5}));
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 2.0);
  const Point uv = diffeos::hyperbolic_Trho().apply(make_point({1, 1}));
  CHECK(uv[0] == 0.0);
  CHECK(uv[1] == 1.0);
  const Point pole = diffeos::cart_to_spherical().apply(make_point({0, 0, 1}));
  CHECK(pole[0] == 1.0);
  CHECK(pole[1] == 0.0);
  CHECK(pole[2] == 0.0);
  CHECK_THROWS_AS(diffeos::reciprocal(2).apply(make_point({0.0, 1.0})), AuditError);
  CHECK_THROWS_AS(diffeos::cart_to_spherical().apply(make_point({0, 0, 0})), AuditError);
  CHECK_THROWS_AS(diffeos::cart_to_spherical().apply(make_point({-1, 0, 1})), AuditError);
}

TEST_CASE("jacobian examples") {
  const Diffeo r = diffeos::reciprocal(2);
  CHECK(r.jac_det_abs(make_point({1, 1})) == 1.0);
  CHECK(r.jac_det_abs(make_point({2, 1})) == 0.25);
  // spherical -> Cartesian volume element at r=2, theta=pi/2
  const Diffeo sph = diffeos::cart_to_spherical();
  CHECK(sph.inverse().jac_det_abs(make_point({2, M_PI / 2, 0.3})) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(sph.jac_det_abs(make_point({0, 2, 0})) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(diffeos::square_axis0(1).jac_det_abs(make_point({0.0})), AuditError);
}

TEST_CASE("fd_jacobian examples") {
  Matrix G(3, 2);
  G << 2, 1, 4, 2, 1, 0;
  VectorField lin = [G](const Point& m) -> Point { return G * m; };
  const Matrix J = fd_jacobian(lin, make_point({0.7, -1.3}));
  CHECK((J - G).cwiseAbs().maxCoeff() < 1e-9);

  const Diffeo r = diffeos::reciprocal(2);
  const Matrix Jr = fd_jacobian([&](const Point& x) { return r.apply(x); }, make_point({1, 1}), 1e-5);
  CHECK(std::abs(Jr(0, 0) + 1) < 1e-8);
  CHECK(std::abs(Jr(1, 1) + 1) < 1e-8);
  CHECK(std::abs(Jr(0, 1)) < 1e-12);

  const Diffeo t = diffeos::tan_axis0(1);
  const Matrix Jt = fd_jacobian([&](const Point& x) { return t.apply(x); }, make_point({1.5}));
  const double sec2 = 1.0 / std::pow(std::cos(1.5), 2);
  CHECK(std::abs(sec2 - 199.85) < 0.01);
  CHECK(std::abs(Jt(0, 0) - sec2) < 1e-3 * sec2);

  CHECK_THROWS_AS(fd_jacobian([&](const Point& x) { return r.apply(x); }, make_point({1e-6, 1}), 1e-6),
                  AuditError);
}

TEST_CASE("round trip and analytic-vs-FD jacobian for every registry diffeo") {
  std::mt19937_64 rng(11);
  for (const auto& id : diffeo_ids()) {
    const int dim = dim_for(id);
    const Diffeo d = diffeo_from_id(id, dim);
    const Box b = sample_box(id, dim);
    double worst_rt = 0, worst_jac = 0;
    for (int k = 0; k < 1000; ++k) {
      const Point x = draw(rng, b);
      const Point back = d.invert(d.apply(x));
      worst_rt = std::max(worst_rt, (back - x).cwiseAbs().maxCoeff() / (1 + x.cwiseAbs().maxCoeff()));
      if (k < 200) {
        const double a = d.jac_det_abs(x);
        const double fd = d.fd_jac_det_abs(x);
        worst_jac = std::max(worst_jac, std::abs(a - fd) / a);
      }
    }
    INFO(id);
    CHECK(worst_rt < 1e-9);
    CHECK(worst_jac < 1e-6);
  }
}

TEST_CASE("compose obeys the chain rule") {
  const Diffeo r = diffeos::reciprocal(2);
  const Diffeo rr = compose(r, r);
  for (double a : {0.3, 1.0, 2.5}) {
    const Point x = make_point({a, 1.7});
    CHECK((rr.apply(x) - x).norm() < 1e-15);
    CHECK(rr.jac_det_abs(x) == doctest::Approx(1.0).epsilon(1e-14));
  }

  std::mt19937_64 rng(5);
  const std::vector<std::string> ids2 = {"identity", "reciprocal", "tan_axis0", "square_axis0",
                                         "cubic", "odd_cubic", "hyperbolic_Trho"};
  const Box b(make_point({0.2, 0.3}), make_point({1.2, 1.3}));
  for (const auto& ia : ids2) {
    for (const auto& ib : ids2) {
      const Diffeo A = diffeo_from_id(ia, 2), B = diffeo_from_id(ib, 2);
      const Diffeo C = compose(A, B);
      for (int k = 0; k < 20; ++k) {
        const Point x = draw(rng, b);
        if (!C.in_domain(x)) continue;
        const double lhs = C.jac_det_abs(x);
        const double rhs = A.jac_det_abs(B.apply(x)) * B.jac_det_abs(x);
        CHECK(std::abs(lhs - rhs) <= 1e-8 * rhs);
        CHECK((C.invert(C.apply(x)) - x).norm() < 1e-9 * (1 + x.norm()));
      }
    }
  }

  const Diffeo h = diffeos::hyperbolic_Trho();
  const Diffeo hi = compose(h, h.inverse());
  for (double u = 0.5; u <= 2.0; u += 0.25) {
    for (double v = 0.5; v <= 2.0; v += 0.25) {
      const Point y = make_point({u, v});
      CHECK((hi.apply(y) - y).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  const Diffeo id2 = diffeos::identity(2);
  for (int k = 0; k < 100; ++k) {
    const Point x = draw(rng, b);
    const Diffeo c = compose(h, id2);
    CHECK((c.apply(x) - h.apply(x)).norm() == 0.0);
    CHECK(c.jac_det_abs(x) == h.jac_det_abs(x));
  }
  CHECK_THROWS_AS(compose(diffeos::identity(2), diffeos::identity(3)), AuditError);
}

TEST_CASE("image boxes and singularity detection") {
  const Box b(make_point({1, 1}), make_point({2, 2}));
  auto img = diffeos::reciprocal(2).image_box(b);
  REQUIRE(img);
  CHECK(img->lo[0] == 0.5);
  CHECK(img->hi[0] == 1.0);
  CHECK_FALSE(diffeos::reciprocal(2).box_ok(Box(make_point({-1, 1}), make_point({1, 2}))));
  CHECK_FALSE(diffeos::tan_axis0(1).box_ok(Box(make_point({1.0}), make_point({1.6}))));
  CHECK_FALSE(diffeos::cart_to_spherical().image_box(Box::unit(3)).has_value());
  const Diffeo p = diffeos::permutation({0, 2, 1});
  const Point y = p.apply(make_point({1, 2, 3}));
  CHECK(y[1] == 3.0);
  CHECK(p.invert(y)[1] == 2.0);
}
