#include "bkaudit/modal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "bkaudit/errors.hpp"

namespace bkaudit {

namespace {

double checked(const Density& p, const Point& x) {
  const double v = p(x);
  if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "density is not finite at a search point");
  return v;
}

Point cell_center(const Box& b, const std::vector<int>& idx, int n) {
  Point x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = b.lo[i] + (idx[i] + 0.5) * (b.hi[i] - b.lo[i]) / n;
  return x;
}

std::vector<int> unflatten(long long k, int dim, int n) {
  std::vector<int> idx(dim);
  for (int i = 0; i < dim; ++i) {
    idx[i] = static_cast<int>(k % n);
    k /= n;
  }
  return idx;
}

// Nelder-Mead on f from x0 with initial steps `step`; stops when the simplex
// spread falls below xtol in every coordinate.
Point nelder_mead(const std::function<double(const Point&)>& f, const Point& x0, const Point& step, double xtol,
                  int max_iter, bool& converged) {
  const int n = static_cast<int>(x0.size());
  std::vector<Point> s(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 0; i < n; ++i) s[i + 1][i] += step[i];
  for (int i = 0; i <= n; ++i) fs[i] = f(s[i]);
  std::vector<int> order(n + 1);
  converged = false;
  for (int it = 0; it < max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Point> s2;
    std::vector<double> f2;
    for (int i : order) s2.push_back(s[i]), f2.push_back(fs[i]);
    s.swap(s2);
    fs.swap(f2);

    double spread = 0.0;
    for (int i = 1; i <= n; ++i) spread = std::max(spread, (s[i] - s[0]).cwiseAbs().maxCoeff());
    if (spread < xtol) {
      converged = true;
      break;
    }
    Point c = Point::Zero(n);
    for (int i = 0; i < n; ++i) c += s[i];
    c /= n;
    const Point xr = c + (c - s[n]);
    const double fr = f(xr);
    if (fr < fs[0]) {
      const Point xe = c + 2.0 * (c - s[n]);
      const double fe = f(xe);
      if (fe < fr) s[n] = xe, fs[n] = fe;
      else s[n] = xr, fs[n] = fr;
    } else if (fr < fs[n - 1]) {
      s[n] = xr, fs[n] = fr;
    } else {
      const bool outside = fr < fs[n];
      const Point xc = outside ? Point(c + 0.5 * (xr - c)) : Point(c + 0.5 * (s[n] - c));
      const double fc = f(xc);
      if (fc < (outside ? fr : fs[n])) {
        s[n] = xc, fs[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          s[i] = s[0] + 0.5 * (s[i] - s[0]);
          fs[i] = f(s[i]);
        }
      }
    }
  }
  const int best = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  return s[best];
}

// Newton steps on a fourth-order central-difference gradient. -log p is flat
// to rounding near the optimum, so the simplex alone stalls around 1e-8.
Point newton_polish(const std::function<double(const Point&)>& f, Point x, const Box& b) {
  const int n = static_cast<int>(x.size());
  auto grad = [&](const Point& y, double h) {
    Point g(n);
    for (int i = 0; i < n; ++i) {
      Point a = y, c = y, a2 = y, c2 = y;
      a[i] += h, c[i] -= h, a2[i] += 2 * h, c2[i] -= 2 * h;
      g[i] = (8 * (f(a) - f(c)) - (f(a2) - f(c2))) / (12 * h);
    }
    return g;
  };
  const double scale = 1.0 + b.width().maxCoeff();
  const double h = 1e-3 * b.width().minCoeff();
  for (int it = 0; it < 20; ++it) {
    const Point g = grad(x, h);
    if (!g.allFinite()) break;
    Matrix H(n, n);
    const double hh = 1e-2 * h;
    for (int j = 0; j < n; ++j) {
      Point a = x, c = x;
      a[j] += hh, c[j] -= hh;
      H.col(j) = (grad(a, h) - grad(c, h)) / (2 * hh);
    }
    H = 0.5 * (H + H.transpose());
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) break;  // not locally convex; keep the simplex result
    const Point step = -llt.solve(g);
    const Point y = x + step;
    if (!b.contains(y) || !(f(y) <= f(x) + 1e-12 * std::abs(f(x)) + 1e-14)) break;
    x = y;
    if (step.cwiseAbs().maxCoeff() < 1e-14 * scale) break;
  }
  return x;
}

}  // namespace

ModeResult find_mode(const Density& p, const Box& b, int per_axis) {
  if (b.dim() != p.dim()) fail(ErrorKind::DimensionMismatch, "find_mode: box dimension");
  if (per_axis < 2) fail(ErrorKind::ValidationError, "find_mode: grid needs at least 2 cells per axis");
  const int d = b.dim();
  long long total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  std::vector<double> vals(static_cast<size_t>(total));
  bool bad = false;
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < total; ++k) {
    const double v = p(cell_center(b, unflatten(k, d, per_axis), per_axis));
    if (!std::isfinite(v)) bad = true;
    vals[static_cast<size_t>(k)] = v;
  }
  if (bad) fail(ErrorKind::NonFinite, "density is not finite on the search grid");
  const double top = *std::max_element(vals.begin(), vals.end());
  if (!(top > 0.0)) fail(ErrorKind::EmptySupport, "density vanishes on the search box");

  ModeResult out;
  out.method = "grid_polish";
  std::vector<long long> ties;
  for (long long k = 0; k < total; ++k)
    if (vals[static_cast<size_t>(k)] >= top * (1.0 - 1e-12)) ties.push_back(k);
  if (static_cast<long long>(ties.size()) > (1LL << d)) {
    // flat top: no unique argmax, report the centroid of the top cells
    Point c = Point::Zero(d);
    for (long long k : ties) c += cell_center(b, unflatten(k, d, per_axis), per_axis);
    out.argmax = c / static_cast<double>(ties.size());
    out.value = checked(p, out.argmax);
    out.converged = true;
    out.plateau = true;
    return out;
  }

  const Point x0 = cell_center(b, unflatten(ties.front(), d, per_axis), per_axis);
  auto neglog = [&](const Point& x) {
    if (!b.contains(x)) return std::numeric_limits<double>::infinity();
    const double v = checked(p, x);
    // relative to the grid maximum, so a constant factor cancels
    return v > 0.0 ? -std::log(v / top) : std::numeric_limits<double>::infinity();
  };
  const Point step = b.width() / per_axis;
  bool conv = false;
  Point x = nelder_mead(neglog, x0, step, 1e-11 * (1.0 + b.width().maxCoeff()), 4000, conv);
  // restart once from the result to shake off a collapsed simplex
  bool conv2 = false;
  x = nelder_mead(neglog, x, 0.01 * step, 1e-12 * (1.0 + b.width().maxCoeff()), 4000, conv2);
  x = newton_polish(neglog, x, b);
  out.argmax = x;
  out.value = checked(p, x);
  out.converged = conv && conv2;
  return out;
}

double max_value(const Density& p, const Box& b) { return find_mode(p, b).value; }

ModeAudit mode_invariance_audit(const Density& p, const Diffeo& t, const Box& b) {
  if (!t.box_ok(b)) fail(ErrorKind::DomainError, t.name() + " is not valid on the search box");
  const auto img = t.image_box(b);
  if (!img) fail(ErrorKind::DomainError, "image box of " + t.name() + " not decidable");
  ModeAudit a;
  a.original = find_mode(p, b);
  a.transformed = find_mode(pushforward(p, t, *img), *img);
  a.back_mapped = t.invert(a.transformed.argmax);
  a.delta = (a.back_mapped - a.original.argmax).cwiseAbs().maxCoeff();
  a.pass = a.delta <= 1e-4;
  return a;
}

LognormalHyperbolicModes lognormal_hyperbolic_modes(double mu_T, double mu_rho, double s_T, double s_rho) {
  const Density f = densities::lognormal_product(make_point({mu_T, mu_rho}), make_point({s_T, s_rho}));
  const Diffeo h = diffeos::hyperbolic_Trho();
  LognormalHyperbolicModes m;
  m.f_mode.method = "analytic";
  m.f_mode.argmax = make_point({std::exp(mu_T - s_T * s_T), std::exp(mu_rho - s_rho * s_rho)});
  m.f_mode.value = f(m.f_mode.argmax);
  m.f_mode.converged = true;
  // ln v + u = mu_T - s_T^2/2, ln v - u = mu_rho - s_rho^2/2
  const double a = mu_T - s_T * s_T / 2, c = mu_rho - s_rho * s_rho / 2;
  m.g_mode.method = "analytic";
  m.g_mode.argmax = make_point({(a - c) / 2, std::exp((a + c) / 2)});
  m.g_mode.value = pushforward_along(f, h, h.invert(m.g_mode.argmax));
  m.g_mode.converged = true;
  m.g_mode_back = h.invert(m.g_mode.argmax);
  m.f_at_g_mode = f(m.g_mode_back);
  return m;
}

double cubic_gaussian_mode_x(double mu, double s) {
  const double disc = mu * mu - 8.0 * s * s;
  if (disc < 0.0) fail(ErrorKind::DomainError, "no interior mode for the cubic image");
  return (mu + std::sqrt(disc)) / 2.0;
}

}  // namespace bkaudit
