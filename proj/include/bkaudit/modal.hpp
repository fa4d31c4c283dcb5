#pragma once

#include <string>

#include "bkaudit/coords.hpp"
#include "bkaudit/density.hpp"

namespace bkaudit {

struct ModeResult {
  Point argmax;
  double value = 0.0;
  std::string method;  // "analytic" or "grid_polish"
  bool converged = false;
  bool plateau = false;  // flat maximum; argmax is the centroid of the top cells
};

// Grid of `per_axis` cells per axis, then Nelder-Mead on -log p from the
// best cell. Evaluations that are NaN or infinite raise NonFinite.
ModeResult find_mode(const Density& p, const Box& b, int per_axis = 64);

double max_value(const Density& p, const Box& b);

struct ModeAudit {
  ModeResult original;
  ModeResult transformed;  // in the new coordinates
  Point back_mapped;       // transformed mode mapped back through t^-1
  double delta = 0.0;      // max-abs distance between the two modes
  bool pass = false;       // delta <= 1e-4
};

ModeAudit mode_invariance_audit(const Density& p, const Diffeo& t, const Box& b);

// Closed forms for a product of two log-normals f(T, rho) and its image
// g(u, v) under u = ln(T/rho)/2, v = sqrt(T rho).
struct LognormalHyperbolicModes {
  ModeResult f_mode;          // exp(mu - s^2) per axis
  ModeResult g_mode;          // (u, v) maximizing g
  Point g_mode_back;          // exp(mu - s^2/2) per axis
  double f_at_g_mode = 0.0;   // f evaluated at the back-mapped g mode
};
LognormalHyperbolicModes lognormal_hyperbolic_modes(double mu_T, double mu_rho, double s_T, double s_rho);

// Mode of N(mu, s^2) pushed through x -> x^3 (positive branch), mapped back
// to x: (mu + sqrt(mu^2 - 8 s^2)) / 2. DomainError when mu^2 < 8 s^2.
double cubic_gaussian_mode_x(double mu, double s);

}  // namespace bkaudit
