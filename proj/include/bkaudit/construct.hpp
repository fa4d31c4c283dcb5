#pragma once

#include <functional>

#include "bkaudit/coords.hpp"
#include "bkaudit/density.hpp"
#include "bkaudit/evidence.hpp"
#include "bkaudit/transdim.hpp"

namespace bkaudit {

// Gaussian tube of width sigma around {(x1, g(x1))} in [0,1]^n, x1 in [0,1]^k.
struct TubeSpec {
  int n = 2;
  int k = 1;
  VectorField g;
  double sigma = 0.1;
  double amplitude = 1.0;
};

// Width giving the on-manifold value c: A / sqrt((2 pi)^(n-k) sigma^(2(n-k))) = c.
double sigma_for_value(int n, int k, double A, double c);
// Width giving the naive submanifold integral c V = E.
double sigma_for_evidence(int n, int k, double A, double V, double E);

Density tube_density(const TubeSpec& t);
// Surface measure of the manifold inside the cube (x1 ranges over [0,1]^k).
double manifold_volume(const TubeSpec& t, const QuadratureSpec& q);
// Integral of the tube density over the manifold, with surface measure.
double tube_manifold_integral(const TubeSpec& t, const QuadratureSpec& q);
// Total mass of the tube on [0,1]^n.
double tube_mass(const TubeSpec& t, const QuadratureSpec& q);

struct TransportOptions {
  int table_nodes = 257;     // first-coordinate CDF table
  double inner_rel = 1e-10;  // nested 1D quadrature
  double inner_abs = 1e-13;
  double inv_tol = 1e-10;    // CDF inversion
};

// Knothe-Rosenblatt map from f to g (dimension <= 3): each coordinate goes
// through its conditional CDF under f, then the inverse conditional CDF
// under g. Supports are mapped affinely onto the unit cube first.
// NonPositiveDensity if either density vanishes on an interior probe grid;
// CDFInversionFailure if an inversion cannot meet inv_tol.
Diffeo triangular_transport(const Density& f, const Density& g, const TransportOptions& opt = {});

// Density on [0,1]^n, uniform in the first n-1 coordinates, whose last
// coordinate has value c at ridge(y_<n) while the mass below the ridge stays
// equal to the ridge height. Transporting the uniform cube onto it leaves the
// ridge surface in place with |det J| = 1/c there.
Density split_tube_target(int n, const std::function<double(const Point&)>& ridge, double c, double width);

struct AnyEvidenceResult {
  double target = 0.0;
  double base_evidence = 0.0;  // k=2 evidence with the uniform data prior
  double ridge_value = 0.0;    // c = target / base
  double tube_sigma = 0.0;
  double achieved = 0.0;
  double rel_err = 0.0;
  InvarianceVerdict audit;
};

// Data reparameterization of the trans-dimensional Cartesian case under which
// the k=2 evidence equals `target`.
AnyEvidenceResult any_evidence_transdim(const TransdimCase& tc, double target, double amplitude,
                                        const QuadratureSpec& q);

}  // namespace bkaudit
