#include "bkaudit/density.hpp"

#include <cmath>

#include "bkaudit/errors.hpp"

namespace bkaudit {

Density::Density(std::string name, Box support, ScalarField unnorm, std::optional<double> norm_const)
    : name_(std::move(name)),
      support_(std::move(support)),
      unnorm_(std::make_shared<const ScalarField>(std::move(unnorm))),
      norm_const_(norm_const) {
  if (norm_const_ && !(*norm_const_ > 0.0)) fail(ErrorKind::NonIntegrable, "norm_const must be positive");
}

double Density::eval_unnorm(const Point& x) const {
  if (x.size() != dim()) fail(ErrorKind::DimensionMismatch, name_ + ": wrong point dimension");
  if (!support_.contains(x)) return 0.0;
  const double v = (*unnorm_)(x);
  return v > 0.0 ? v : 0.0;
}

DensityValue Density::evaluate(const Point& x) const {
  const double u = eval_unnorm(x);
  if (norm_const_) return {u / *norm_const_, true};
  return {u, false};
}

Density Density::with_norm_const(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::NonIntegrable, "norm_const must be finite and positive");
  Density d = *this;
  d.norm_const_ = c;
  return d;
}

Density Density::renamed(std::string name) const {
  Density d = *this;
  d.name_ = std::move(name);
  return d;
}

Density Density::with_uniform_level(double level) const {
  Density d = *this;
  d.uniform_level_ = level;
  return d;
}

namespace densities {

Density uniform_box(const Box& b) {
  Density d("uniform_box", b, [](const Point&) { return 1.0; }, b.volume());
  return d.with_uniform_level(1.0);
}

Density gaussian_diag(const Point& mean, const Point& sd) {
  if (mean.size() != sd.size()) fail(ErrorKind::DimensionMismatch, "gaussian_diag: mean/sd sizes differ");
  for (Eigen::Index i = 0; i < sd.size(); ++i)
    if (!(sd[i] > 0.0)) fail(ErrorKind::DomainError, "gaussian_diag: sd must be positive");
  const double lognorm = -0.5 * static_cast<double>(mean.size()) * std::log(2.0 * M_PI) -
                         sd.array().log().sum();
  ScalarField f = [mean, sd, lognorm](const Point& x) {
    const double q = ((x - mean).array() / sd.array()).square().sum();
    return std::exp(lognorm - 0.5 * q);
  };
  // truncation at +-8 sd loses < 1e-15 of the mass
  return Density("gaussian_diag", Box(mean - 8.0 * sd, mean + 8.0 * sd), f, 1.0);
}

Density lognormal_product(const Point& mu, const Point& sigma) {
  if (mu.size() != sigma.size()) fail(ErrorKind::DimensionMismatch, "lognormal_product: sizes differ");
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (!(sigma[i] > 0.0)) fail(ErrorKind::DomainError, "lognormal_product: sigma must be positive");
  const double lognorm = -0.5 * static_cast<double>(mu.size()) * std::log(2.0 * M_PI) -
                         sigma.array().log().sum();
  ScalarField f = [mu, sigma, lognorm](const Point& x) {
    double s = lognorm;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!(x[i] > 0.0)) return 0.0;
      const double z = (std::log(x[i]) - mu[i]) / sigma[i];
      s += -0.5 * z * z - std::log(x[i]);
    }
    return std::exp(s);
  };
  const Point lo = (mu - 8.0 * sigma).array().exp();
  const Point hi = (mu + 8.0 * sigma).array().exp();
  return Density("lognormal_product", Box(lo, hi), f, 1.0);
}

Density tube(int n, int k, const VectorField& g, double sigma, double amplitude) {
  if (!(n > k && k >= 1)) fail(ErrorKind::DimensionMismatch, "tube: need n > k >= 1");
  if (!(sigma > 0.0) || !(amplitude > 0.0)) fail(ErrorKind::DomainError, "tube: sigma and A must be positive");
  const int m = n - k;
  const double peak = amplitude / std::sqrt(std::pow(2.0 * M_PI, m) * std::pow(sigma, 2 * m));
  ScalarField f = [g, k, m, sigma, peak](const Point& x) {
    const Point base = x.head(k);
    const Point off = x.tail(m) - g(base);
    return peak * std::exp(-off.squaredNorm() / (2.0 * sigma * sigma));
  };
  return Density("tube", Box::unit(n), f);
}

}  // namespace densities

Density pushforward(const Density& p, const Diffeo& t, std::optional<Box> image) {
  if (t.dim() != p.dim()) fail(ErrorKind::DimensionMismatch, "pushforward: dimensions differ");
  if (!t.box_ok(p.support())) {
    fail(ErrorKind::DomainError, "pushforward: support crosses a singularity of " + t.name());
  }
  Box img;
  if (image) {
    img = *image;
  } else {
    auto b = t.image_box(p.support());
    if (!b) fail(ErrorKind::DomainError, "pushforward: " + t.name() + " needs an explicit image box");
    img = *b;
  }
  ScalarField q = [p, t](const Point& y) {
    if (!t.in_range(y)) return 0.0;
    const Point x = t.invert(y);
    const double v = p.eval_unnorm(x);
    if (v == 0.0) return 0.0;
    return v * t.inv_jac_det_abs(y);
  };
  Density out(p.name() + "|" + t.name(), img, q, p.norm_const());
  return out;
}

double pushforward_along(const Density& p, const Diffeo& t, const Point& x) {
  const double v = p(x);
  if (v == 0.0) return 0.0;
  return v / t.jac_det_abs(x);
}

Density product(const std::vector<Density>& ps) {
  if (ps.empty()) fail(ErrorKind::DimensionMismatch, "product of no densities");
  int n = 0;
  for (const auto& p : ps) n += p.dim();
  Point lo(n), hi(n);
  std::vector<int> offs;
  int off = 0;
  std::optional<double> norm = 1.0;
  std::optional<double> level = 1.0;
  std::string name;
  for (const auto& p : ps) {
    lo.segment(off, p.dim()) = p.support().lo;
    hi.segment(off, p.dim()) = p.support().hi;
    offs.push_back(off);
    off += p.dim();
    if (norm && p.norm_const()) *norm *= *p.norm_const(); else norm.reset();
    if (level && p.uniform_level()) *level *= *p.uniform_level(); else level.reset();
    name += (name.empty() ? "" : "x") + p.name();
  }
  ScalarField f = [ps, offs](const Point& x) {
    double v = 1.0;
    for (size_t i = 0; i < ps.size() && v != 0.0; ++i) {
      v *= ps[i].eval_unnorm(x.segment(offs[i], ps[i].dim()));
    }
    return v;
  };
  Density d(name, Box(lo, hi), f, norm);
  if (level) d = d.with_uniform_level(*level);
  return d;
}

Density normalize(const Density& p, const QuadratureSpec& q) {
  if (p.uniform_level()) return p.with_norm_const(*p.uniform_level() * p.support().volume());
  ScalarField f = [&p](const Point& x) { return p.eval_unnorm(x); };
  const IntegrationResult r = integrate(f, p.support(), q);
  if (!std::isfinite(r.value) || !(r.value > 0.0)) {
    fail(ErrorKind::NonIntegrable, p.name() + ": integral is not finite and positive");
  }
  return p.with_norm_const(r.value);
}

}  // namespace bkaudit
