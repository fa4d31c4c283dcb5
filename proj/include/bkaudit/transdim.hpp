#pragma once

#include <string>

#include "bkaudit/evidence.hpp"
#include "bkaudit/geometry.hpp"

namespace bkaudit {

// Linear three-datum problem fitted with one (G1) or two (G2) parameters,
// uniform data noise of half-width sigma, uniform model priors of edge dm.
struct TransdimCase {
  Point d_obs = make_point({3.1, 5.8, 1.1});
  double sigma = 0.4;
  double dm = 2.0;

  Matrix G2() const;
  Matrix G1() const;  // first column of G2
  Density data_prior() const;
};

// Parallelogram P1 P2 P3 P4 of models fitting all three data, from the
// closed-form corner expressions. DegeneratePolygon when its area vanishes.
Polygon feasible_region_k2(const TransdimCase& tc);
// Intersection of the three single-datum intervals for m1.
Interval feasible_segment_k1(const TransdimCase& tc);

EvidenceResult evidence_cartesian(const TransdimCase& tc, int k);

// Data likelihood after moving the data to spherical coordinates: the flat
// Cartesian level pushed through cart_to_spherical, evaluated at S(G m).
double spherical_likelihood(const TransdimCase& tc, int k, const Point& m);
// Explicit algebraic form r(Gm) * rho(Gm) / (2 sigma)^3 (cross-check only).
double spherical_likelihood_algebraic(const TransdimCase& tc, const Point& m);

// k=1: closed form on the segment. k=2: quadrature over the unit square
// through m = P1 + u (P2-P1) + v (P4-P1).
EvidenceResult evidence_spherical(const TransdimCase& tc, int k, const QuadratureSpec& q);
// k=2 by a second route: P split into two triangles, each integrated directly.
EvidenceResult evidence_spherical_k2_direct(const TransdimCase& tc, const QuadratureSpec& q);

// Closed-form value of the likelihood integral over P for the default case
// (sigma = 0.4), without the 1/dm^2 prior factor.
struct ClosedFormCheck {
  double value = 0.0;
  bool log_args_positive = false;
  double asinh_two_way_diff = 0.0;
};
ClosedFormCheck spherical_k2_closed_form();

struct TransdimFlip {
  BayesFactorReport cartesian;
  BayesFactorReport spherical;
  bool flip = false;  // Cartesian favours k=2 while spherical favours k=1
};
TransdimFlip transdim_flip(const TransdimCase& tc, const QuadratureSpec& q);

struct AicComparison {
  double max_like_k1 = 0.0;
  double max_like_k2 = 0.0;
  double aic_k1 = 0.0;
  double aic_k2 = 0.0;
  int preferred = 0;
};
// parameterization: "cart" or "sph"; maximum likelihood by grid + polish
// over the segment and the parallelogram.
AicComparison transdim_aic(const TransdimCase& tc, const std::string& parameterization);

}  // namespace bkaudit
