#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bkaudit/coords.hpp"
#include "bkaudit/quad.hpp"
#include "bkaudit/types.hpp"

namespace bkaudit {

struct DensityValue {
  double value = 0.0;
  bool normalized = false;
};

// Density over an axis-aligned box. eval_unnorm is zero outside the support.
class Density {
 public:
  Density(std::string name, Box support, ScalarField unnorm,
          std::optional<double> norm_const = std::nullopt);

  const std::string& name() const { return name_; }
  int dim() const { return support_.dim(); }
  const Box& support() const { return support_; }
  const std::optional<double>& norm_const() const { return norm_const_; }

  double eval_unnorm(const Point& x) const;
  DensityValue evaluate(const Point& x) const;
  // Normalized value when the constant is known, unnormalized otherwise.
  double operator()(const Point& x) const { return evaluate(x).value; }

  Density with_norm_const(double c) const;
  Density renamed(std::string name) const;

  // Constant (unnormalized) level when the density is flat on its whole
  // support; lets evidence code take the exact polytope path.
  const std::optional<double>& uniform_level() const { return uniform_level_; }
  Density with_uniform_level(double level) const;

 private:
  std::string name_;
  Box support_;
  std::shared_ptr<const ScalarField> unnorm_;
  std::optional<double> norm_const_;
  std::optional<double> uniform_level_;
};

namespace densities {

Density uniform_box(const Box& b);
Density gaussian_diag(const Point& mean, const Point& sd);
Density lognormal_product(const Point& mu, const Point& sigma);
// A/sqrt((2 pi)^(n-k) s^(2(n-k))) exp(-|x2 - g(x1)|^2 / 2 s^2) on [0,1]^n.
Density tube(int n, int k, const VectorField& g, double sigma, double amplitude);

}  // namespace densities

// q(y) = p(t^-1 y) |det J_{t^-1}(y)|. Support is the image box of p's
// support (corner transform for per-axis monotone maps) or `image`.
Density pushforward(const Density& p, const Diffeo& t, std::optional<Box> image = std::nullopt);

// Value of pushforward(p, t) at t(x), computed with the forward Jacobian:
// p(x) / |det J_t(x)|. Avoids the inverse map (and its branch choices).
double pushforward_along(const Density& p, const Diffeo& t, const Point& x);

Density product(const std::vector<Density>& ps);

Density normalize(const Density& p, const QuadratureSpec& q);

}  // namespace bkaudit
