#include "bkaudit/hier.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "bkaudit/errors.hpp"

namespace bkaudit {

std::string hier_case_name(HierCaseId id) {
  switch (id) {
    case HierCaseId::cart: return "cart";
    case HierCaseId::tan: return "tan";
    case HierCaseId::square: return "square";
  }
  return "?";
}

HierCaseId hier_case_from_name(const std::string& s) {
  if (s == "cart") return HierCaseId::cart;
  if (s == "tan") return HierCaseId::tan;
  if (s == "square") return HierCaseId::square;
  fail(ErrorKind::ValidationError, "unknown hierarchical case '" + s + "'");
}

HierCase hier_case(HierCaseId id) {
  HierCase hc;
  hc.id = id;
  return hc;
}

Matrix hier_forward_matrix(const HierCase& hc) {
  Matrix G(3, 2);
  G << 0, hc.a, hc.b, 0, hc.c, 0;
  return G;
}

Diffeo hier_data_transform(const HierCase& hc) {
  switch (hc.id) {
    case HierCaseId::cart: return diffeos::identity(3);
    case HierCaseId::tan: return diffeos::tan_axis0(3);
    case HierCaseId::square: return diffeos::square_axis0(3);
  }
  fail(ErrorKind::ValidationError, "bad case id");
}

Box hier_model_box(const HierCase& hc) {
  const double h = hc.dm / 2.0;
  return Box(make_point({-h, -h}), make_point({h, h}));
}

double feasibility_threshold(const HierCase& hc) {
  return (hc.b * hc.d_obs[2] - hc.c * hc.d_obs[1]) / (hc.c + hc.b);
}

double feasible_width(const HierCase& hc, double sigma) {
  return (hc.d_obs[1] + sigma) / hc.b - (hc.d_obs[2] - sigma) / hc.c;
}

Box hier_region(const HierCase& hc, double sigma) {
  const Point& d = hc.d_obs;
  const double lo1 = std::max((d[1] - sigma) / hc.b, (d[2] - sigma) / hc.c);
  const double hi1 = std::min((d[1] + sigma) / hc.b, (d[2] + sigma) / hc.c);
  const double lo2 = (d[0] - sigma) / hc.a, hi2 = (d[0] + sigma) / hc.a;
  if (!(hi1 >= lo1)) fail(ErrorKind::EmptySupport, "sigma below the feasibility threshold");
  return Box(make_point({lo1, lo2}), make_point({hi1, hi2}));
}

double hier_likelihood(const HierCase& hc, double sigma, const Point& m) {
  const Point g = hier_forward_matrix(hc) * m;
  for (int i = 0; i < 3; ++i)
    if (std::abs(g[i] - hc.d_obs[i]) > sigma) return 0.0;
  const double s3 = sigma * sigma * sigma;
  switch (hc.id) {
    case HierCaseId::cart: return 1.0 / (8.0 * s3);
    case HierCaseId::tan: {
      const double cs = std::cos(hc.a * m[1]);
      return cs * cs / (8.0 * s3);
    }
    case HierCaseId::square: return 1.0 / (16.0 * s3 * hc.a * m[1]);
  }
  return 0.0;
}

namespace {

void check_sigma(const HierCase& hc, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::DomainError, "sigma must be positive");
  if (hc.id == HierCaseId::square && sigma >= hc.d_obs[0]) {
    fail(ErrorKind::SingularEvidence, "squared-data evidence diverges at sigma >= d1");
  }
}

// shape factor and its sigma-derivative; evidence = K W shape / (scale a sigma^3)
struct Shape {
  double v, dv, scale;
};

Shape shape(const HierCase& hc, double s) {
  const double d1 = hc.d_obs[0];
  switch (hc.id) {
    case HierCaseId::cart: return {s, 1.0, 4.0};  // K W 2s / (8 a s^3)
    case HierCaseId::tan:
      return {std::cos(2 * d1) * std::sin(2 * s) / 2 + s, std::cos(2 * d1) * std::cos(2 * s) + 1, 8.0};
    case HierCaseId::square:
      return {std::log((d1 + s) / (d1 - s)), 1 / (d1 + s) + 1 / (d1 - s), 16.0};
  }
  return {0, 0, 1};
}

}  // namespace

double evidence_profile(const HierCase& hc, double sigma) {
  check_sigma(hc, sigma);
  const double W = feasible_width(hc, sigma);
  if (W <= 0.0) return 0.0;
  const Shape sh = shape(hc, sigma);
  const double K = 1.0 / (hc.dm * hc.dm);
  return K * W * sh.v / (sh.scale * hc.a * sigma * sigma * sigma);
}

double evidence_profile_derivative(const HierCase& hc, double sigma) {
  check_sigma(hc, sigma);
  const double W = feasible_width(hc, sigma);
  if (W <= 0.0) return 0.0;
  const double dW = 1.0 / hc.b + 1.0 / hc.c;
  const Shape sh = shape(hc, sigma);
  const double K = 1.0 / (hc.dm * hc.dm);
  const double s3 = sigma * sigma * sigma;
  return K / (sh.scale * hc.a) * (dW * sh.v + W * sh.dv - 3.0 * W * sh.v / sigma) / s3;
}

namespace {

// Brent's minimizer (golden section with parabolic steps) on [a, b].
template <class F>
double brent_min(F f, double a, double b, double tol) {
  const double cg = 0.5 * (3.0 - std::sqrt(5.0));
  double x = a + cg * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + 1e-14, tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv), q = (x - v) * (fx - fw), p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm ? a : b) - x;
      d = cg * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      (u >= x ? a : b) = x;
      v = w, fv = fw;
      w = x, fw = fx;
      x = u, fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w, fv = fw;
        w = u, fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u, fv = fu;
      }
    }
  }
  return x;
}

}  // namespace

SigmaOptimum optimize_sigma(const HierCase& hc, const Interval& bracket) {
  if (!(bracket.lo > 0.0) || !(bracket.hi > bracket.lo)) fail(ErrorKind::ValidationError, "bad sigma bracket");
  if (hc.id == HierCaseId::square && bracket.hi >= hc.d_obs[0]) {
    // the profile grows without bound toward sigma = d1
    return {hc.d_obs[0], std::numeric_limits<double>::infinity(), "boundary_singular"};
  }
  constexpr int n = 2001;
  const double h = bracket.length() / (n - 1);
  std::vector<double> vals(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) vals[i] = evidence_profile(hc, std::min(bracket.lo + i * h, bracket.hi));
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (vals[i] > vals[best]) best = i;
  if (!(vals[best] > 0.0)) fail(ErrorKind::NoMaximumInBracket, "evidence vanishes on the whole bracket");
  if (best == 0 || best == n - 1) {
    fail(ErrorKind::NoMaximumInBracket, "evidence maximum sits on a regular bracket end");
  }
  double lo = bracket.lo + (best - 1) * h, hi = bracket.lo + (best + 1) * h;
  double s = brent_min([&](double x) { return -evidence_profile(hc, x); }, lo, hi, 1e-10);
  // polish on the analytic derivative where it changes sign
  auto dE = [&](double x) { return evidence_profile_derivative(hc, x); };
  if (dE(lo) > 0.0 && dE(hi) < 0.0) {
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (dE(mid) > 0.0 ? lo : hi) = mid;
    }
    s = 0.5 * (lo + hi);
  }
  return {s, evidence_profile(hc, s), "interior"};
}

namespace {

struct M2Range {
  double lo, hi;
};

M2Range m2_range(const HierCase& hc, double sigma) {
  return {(hc.d_obs[0] - sigma) / hc.a, (hc.d_obs[0] + sigma) / hc.a};
}

// primitive of the case's m2 shape
double m2_primitive(const HierCase& hc, double m) {
  switch (hc.id) {
    case HierCaseId::cart: return m;
    case HierCaseId::tan: return m / 2.0 + std::sin(2.0 * hc.a * m) / (4.0 * hc.a);
    case HierCaseId::square: return std::log(m);
  }
  return 0.0;
}

}  // namespace

double posterior_tail(const HierCase& hc, double sigma, double threshold) {
  if (feasible_width(hc, sigma) < 0.0) fail(ErrorKind::EmptySupport, "sigma below the feasibility threshold");
  const M2Range r = m2_range(hc, sigma);
  if (hc.id == HierCaseId::square && !(r.lo > 0.0)) fail(ErrorKind::SingularEvidence, "1/m2 shape at m2 <= 0");
  if (threshold <= r.lo) return 1.0;
  if (threshold >= r.hi) return 0.0;
  const double F0 = m2_primitive(hc, r.lo), F1 = m2_primitive(hc, r.hi);
  return (F1 - m2_primitive(hc, threshold)) / (F1 - F0);
}

double posterior_m2_norm_const(const HierCase& hc, double sigma) {
  const M2Range r = m2_range(hc, sigma);
  if (hc.id == HierCaseId::square && !(r.lo > 0.0)) fail(ErrorKind::SingularEvidence, "1/m2 shape at m2 <= 0");
  return 1.0 / (m2_primitive(hc, r.hi) - m2_primitive(hc, r.lo));
}

namespace {

constexpr double kPi = 3.14159265358979323846;

void finish_table(DiscreteHyperTable& t) {
  double z = 0.0;
  for (int l = 0; l < 2; ++l) {
    t.lambda[l] = t.cell[l][0] + t.cell[l][1];
    t.delta[l] = t.cell[0][l] + t.cell[1][l];
    z += t.lambda[l];
  }
  for (int i = 0; i < 2; ++i) {
    t.lambda_norm[i] = z > 0.0 ? t.lambda[i] / z : 0.0;
    t.delta_norm[i] = z > 0.0 ? t.delta[i] / z : 0.0;
  }
}

void check_pis(double pl, double pd) {
  if (!(pl >= 0.0 && pl <= 1.0 && pd >= 0.0 && pd <= 1.0)) {
    fail(ErrorKind::ValidationError, "hyper-prior probabilities must lie in [0,1]");
  }
}

DiscreteHyperTable closed_table(double pl, double pd, double k) {
  DiscreteHyperTable t;
  const double k2 = k * k;
  t.cell[0][0] = pl * pd / (2 * kPi) * std::sqrt(2 * kPi / (k2 + 1));
  t.cell[1][0] = (1 - pl) * pd / (4 * kPi) * std::sqrt(8 * kPi / (k2 + 4));
  t.cell[0][1] = pl * (1 - pd) / (4 * kPi) * std::sqrt(8 * kPi / (4 * k2 + 1));
  t.cell[1][1] = (1 - pl) * (1 - pd) / (8 * kPi) * std::sqrt(8 * kPi / (k2 + 1));
  finish_table(t);
  return t;
}

}  // namespace

DiscreteHyperTable discrete_hyper_marginals(double pi_lambda, double pi_delta, double k) {
  check_pis(pi_lambda, pi_delta);
  DiscreteHyperTable t = closed_table(pi_lambda, pi_delta, k);
  const double h = 1e-5 * (1.0 + std::abs(k));
  const DiscreteHyperTable up = closed_table(pi_lambda, pi_delta, k + h);
  const DiscreteHyperTable dn = closed_table(pi_lambda, pi_delta, k - h);
  for (int i = 0; i < 2; ++i) {
    t.dlambda_norm_dk[i] = (up.lambda_norm[i] - dn.lambda_norm[i]) / (2 * h);
    t.ddelta_norm_dk[i] = (up.delta_norm[i] - dn.delta_norm[i]) / (2 * h);
  }
  return t;
}

DiscreteHyperTable discrete_hyper_marginals_quadrature(double pi_lambda, double pi_delta, double k,
                                                       const QuadratureSpec& q) {
  check_pis(pi_lambda, pi_delta);
  DiscreteHyperTable t;
  const double prior_l[2] = {pi_lambda, 1 - pi_lambda};
  const double prior_d[2] = {pi_delta, 1 - pi_delta};
  for (int l = 0; l < 2; ++l) {
    for (int dl = 0; dl < 2; ++dl) {
      const double lam = l + 1.0, del = dl + 1.0;
      // data density N(0, lam^2) at k m, model density N(0, del^2) at m
      auto f = [&](double m) {
        const double g = k * m;
        return std::exp(-0.5 * g * g / (lam * lam)) / (std::sqrt(2 * kPi) * lam) *
               std::exp(-0.5 * m * m / (del * del)) / (std::sqrt(2 * kPi) * del);
      };
      const double L = 40.0 * del;
      const IntegrationResult r = integrate_1d(f, -L, L, q);
      t.cell[l][dl] = prior_l[l] * prior_d[dl] * r.value;
    }
  }
  finish_table(t);
  return t;
}

double gaussian_hyper_posterior(double k, double lambda, double delta) {
  if (!(lambda > 0.0) || !(delta > 0.0)) fail(ErrorKind::DomainError, "lambda and delta must be positive");
  const double pre = std::exp(-0.5 * (lambda * lambda + delta * delta)) / (4 * kPi * kPi * lambda * delta);
  const double width = std::sqrt(2 * kPi / (k * k / (lambda * lambda) + 1.0 / (delta * delta)));
  const double km1 = k - 1.0;
  return pre * width * std::exp(-km1 * km1 / (2.0 * (lambda * lambda + delta * delta * k * k)));
}

double gaussian_hyper_posterior_quadrature(double k, double lambda, double delta) {
  if (!(lambda > 0.0) || !(delta > 0.0)) fail(ErrorKind::DomainError, "lambda and delta must be positive");
  // hyper-priors N(0,1) on lambda and delta, m ~ N(1, delta^2), d = 1 ~ N(k m, lambda^2)
  const double hyper = std::exp(-0.5 * (lambda * lambda + delta * delta)) / (2 * kPi);
  auto f = [&](double m) {
    const double r = 1.0 - k * m, u = m - 1.0;
    return std::exp(-0.5 * r * r / (lambda * lambda) - 0.5 * u * u / (delta * delta)) / (2 * kPi * lambda * delta);
  };
  // integrand peaks between 1 and 1/k; cover both with generous margins
  const double c = k != 0.0 ? 0.5 * (1.0 + 1.0 / k) : 1.0;
  const double half = 40.0 * delta + std::abs(c - 1.0) + (k != 0.0 ? 40.0 * lambda / std::abs(k) : 0.0);
  const IntegrationResult r = gk_adaptive(f, c - half, c + half, 1e-300, 1e-12, 2'000'000);
  return hyper * r.value;
}

GridArgmax gaussian_hyper_argmax(double k, double lo, double hi, double step) {
  if (!(lo > 0.0) || !(hi > lo) || !(step > 0.0)) fail(ErrorKind::ValidationError, "bad argmax grid");
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<GridArgmax> rows(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    GridArgmax r{lo + i * step, lo, -1.0};
    for (int j = 0; j < n; ++j) {
      const double dl = lo + j * step;
      const double v = gaussian_hyper_posterior(k, r.lambda, dl);
      if (v > r.value) r.delta = dl, r.value = v;
    }
    rows[i] = r;
  }
  GridArgmax best = rows[0];
  for (const auto& r : rows)
    if (r.value > best.value) best = r;
  return best;
}

}  // namespace bkaudit
