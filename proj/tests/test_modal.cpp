#include <cmath>

#include "bkaudit/errors.hpp"
#include "bkaudit/modal.hpp"
#include "doctest.h"

using namespace bkaudit;

namespace {

const Box kTRho(make_point({0.05, 0.05}), make_point({5.0, 5.0}));

Density lognormal11() { return densities::lognormal_product(make_point({1.0, 1.0}), make_point({1.0, 1.0})); }

}  // namespace

TEST_CASE("log-normal modes") {
  const ModeResult m = find_mode(lognormal11(), kTRho);
  CHECK(m.method == "grid_polish");
  CHECK(m.converged);
  CHECK_FALSE(m.plateau);
  CHECK(std::abs(m.argmax[0] - 1.0) < 1e-8);
  CHECK(std::abs(m.argmax[1] - 1.0) < 1e-8);
  CHECK(std::abs(m.value - lognormal11()(m.argmax)) < 1e-12);
  CHECK(std::abs(m.value - std::exp(-1.0) / (2 * M_PI)) < 1e-12);

  const Density asym = densities::lognormal_product(make_point({0.3, -0.2}), make_point({0.5, 0.4}));
  const ModeResult a = find_mode(asym, Box(make_point({0.1, 0.1}), make_point({4.0, 4.0})));
  CHECK(std::abs(a.argmax[0] - std::exp(0.3 - 0.25)) < 1e-6);
  CHECK(std::abs(a.argmax[1] - std::exp(-0.2 - 0.16)) < 1e-6);

  // scaling the density leaves the argmax unchanged: bitwise for a power of
  // two, to rounding otherwise
  const Density p = lognormal11();
  const Density s4("x4", p.support(), [p](const Point& x) { return 4.0 * p.eval_unnorm(x); });
  CHECK((find_mode(s4, kTRho).argmax - m.argmax).cwiseAbs().maxCoeff() == 0.0);
  const Density s7("x7.5", p.support(), [p](const Point& x) { return 7.5 * p.eval_unnorm(x); });
  CHECK((find_mode(s7, kTRho).argmax - m.argmax).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("plateau") {
  const Box b(make_point({0.0, 0.0}), make_point({2.0, 3.0}));
  const ModeResult m = find_mode(densities::uniform_box(b), b);
  CHECK(m.plateau);
  CHECK(m.converged);
  CHECK(std::abs(m.value - 1.0 / 6.0) < 1e-15);
  CHECK(b.contains(m.argmax));
  CHECK(std::abs(max_value(densities::uniform_box(b), b) - 1.0 / 6.0) < 1e-15);
}

TEST_CASE("hyperbolic coordinates move the mode") {
  const LognormalHyperbolicModes c = lognormal_hyperbolic_modes(1, 1, 1, 1);
  CHECK(std::abs(c.f_mode.value - 0.0585) < 5e-4);
  CHECK(std::abs(c.f_at_g_mode - 0.0456) < 5e-4);
  CHECK(std::abs(c.g_mode.value - std::exp(-0.25) / (M_PI * std::exp(0.5))) < 1e-12);
  CHECK(std::abs(c.g_mode_back[0] - std::exp(0.5)) < 1e-12);

  const ModeAudit a = mode_invariance_audit(lognormal11(), diffeos::hyperbolic_Trho(), kTRho);
  CHECK_FALSE(a.pass);
  CHECK(std::abs(a.original.argmax[0] - 1.0) < 1e-6);
  CHECK(std::abs(a.back_mapped[0] - std::exp(0.5)) < 1e-6);
  CHECK(std::abs(a.back_mapped[1] - std::exp(0.5)) < 1e-6);
  CHECK(std::abs(a.transformed.argmax[0]) < 1e-6);
  CHECK(std::abs(a.transformed.value - c.g_mode.value) < 1e-10);

  // unequal widths: closed form for (u, v)
  const LognormalHyperbolicModes u = lognormal_hyperbolic_modes(0.5, 1.2, 0.6, 0.9);
  const Density f = densities::lognormal_product(make_point({0.5, 1.2}), make_point({0.6, 0.9}));
  const ModeAudit au = mode_invariance_audit(f, diffeos::hyperbolic_Trho(), kTRho);
  CHECK((au.transformed.argmax - u.g_mode.argmax).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("volume-preserving and cubic maps") {
  const Density g = densities::gaussian_diag(make_point({0.4, -0.3}), make_point({0.5, 0.8}));
  const Box b(make_point({-2.0, -3.0}), make_point({2.0, 3.0}));
  Matrix A(2, 2);
  A << 2.0, 1.0, 1.0, 1.0;  // det 1
  const ModeAudit ok = mode_invariance_audit(g, diffeos::affine(A, make_point({0.3, 0.1})), b);
  CHECK(ok.pass);

  const Density g1 = densities::gaussian_diag(make_point({2.0}), make_point({0.3}));
  const Box b1(make_point({0.5}), make_point({3.5}));
  const ModeAudit cub = mode_invariance_audit(g1, diffeos::cubic(1), b1);
  CHECK_FALSE(cub.pass);
  CHECK(std::abs(cub.original.argmax[0] - 2.0) < 1e-8);
  CHECK(std::abs(cub.back_mapped[0] - cubic_gaussian_mode_x(2.0, 0.3)) < 1e-6);
  CHECK_THROWS_AS(cubic_gaussian_mode_x(0.5, 0.3), AuditError);
}

TEST_CASE("non-finite densities") {
  const Box b(make_point({-1.0}), make_point({1.0}));
  const Density bad("bad", b, [](const Point& x) { return x[0] > 0.3 ? INFINITY : 1.0; });
  CHECK_THROWS_AS(find_mode(bad, b), AuditError);
}
