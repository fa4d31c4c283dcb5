#include "bkaudit/condition.hpp"

#include <cmath>
#include <limits>

#include "bkaudit/errors.hpp"

namespace bkaudit {

Point ForwardModel::operator()(const Point& m) const {
  if (m.size() != m_dim) fail(ErrorKind::DimensionMismatch, name + ": wrong model dimension");
  return map(m);
}

ForwardModel linear_forward(const Matrix& G, const std::string& name) {
  ForwardModel f;
  f.name = name;
  f.m_dim = static_cast<int>(G.cols());
  f.d_dim = static_cast<int>(G.rows());
  f.map = [G](const Point& m) -> Point { return G * m; };
  f.linear_matrix = G;
  return f;
}

ForwardModel general_forward(const std::string& name, int m_dim, int d_dim, VectorField map) {
  ForwardModel f;
  f.name = name;
  f.m_dim = m_dim;
  f.d_dim = d_dim;
  f.map = std::move(map);
  return f;
}

ForwardModel in_model_coords(const ForwardModel& fm, const Diffeo& t) {
  if (t.dim() != fm.m_dim) fail(ErrorKind::DimensionMismatch, "model reparameterization dimension");
  return general_forward(fm.name + "*inv(" + t.name() + ")", fm.m_dim, fm.d_dim,
                         [fm, t](const Point& y) { return fm.map(t.invert(y)); });
}

ForwardModel in_data_coords(const ForwardModel& fm, const Diffeo& t) {
  if (t.dim() != fm.d_dim) fail(ErrorKind::DimensionMismatch, "data reparameterization dimension");
  return general_forward(t.name() + "*" + fm.name, fm.m_dim, fm.d_dim,
                         [fm, t](const Point& m) { return t.apply(fm.map(m)); });
}

ForwardModel after(const ForwardModel& fm, const Diffeo& h) {
  if (h.dim() != fm.m_dim) fail(ErrorKind::DimensionMismatch, "pre-map dimension");
  return general_forward(fm.name + "*" + h.name(), fm.m_dim, fm.d_dim,
                         [fm, h](const Point& m) { return fm.map(h.apply(m)); });
}

Density graph_posterior(const Density& prior_d, const Density& prior_m, const ForwardModel& fm) {
  if (prior_m.dim() != fm.m_dim || prior_d.dim() != fm.d_dim) {
    fail(ErrorKind::DimensionMismatch, "graph_posterior: prior and forward dimensions differ");
  }
  ScalarField q = [prior_d, prior_m, fm](const Point& m) {
    const double pm = prior_m(m);
    if (pm == 0.0) return 0.0;
    return prior_d(fm.map(m)) * pm;
  };
  return Density("post(" + prior_m.name() + ")", prior_m.support(), q);
}

std::optional<Interval> line_box_interval(const AffineLine& line, const Box& b) {
  if (line.point.size() != b.dim() || line.direction.size() != b.dim()) {
    fail(ErrorKind::DimensionMismatch, "line and box dimensions differ");
  }
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < b.dim(); ++i) {
    const double p = line.point[i], d = line.direction[i];
    if (d == 0.0) {
      if (p < b.lo[i] || p > b.hi[i]) return std::nullopt;
      continue;
    }
    double a = (b.lo[i] - p) / d, c = (b.hi[i] - p) / d;
    if (a > c) std::swap(a, c);
    lo = std::max(lo, a);
    hi = std::min(hi, c);
  }
  if (!(hi > lo)) return std::nullopt;
  return Interval{lo, hi};
}

Density restrict_to_affine(const Density& p, const AffineLine& line, const QuadratureSpec& q) {
  if (line.direction.norm() == 0.0) fail(ErrorKind::DomainError, "line direction is zero");
  const auto span = line_box_interval(line, p.support());
  if (!span) fail(ErrorKind::EmptySupport, p.name() + ": line misses the support");
  ScalarField f = [p, line](const Point& t) { return p.eval_unnorm(line.at(t[0])); };
  Density c(p.name() + "|line", Box(make_point({span->lo}), make_point({span->hi})), f);
  const IntegrationResult r = integrate(f, c.support(), q);
  if (!(r.value > 0.0)) fail(ErrorKind::EmptySupport, p.name() + ": zero mass along the line");
  return c.with_norm_const(r.value);
}

namespace {

// Orthonormal complement of a single tangent vector.
Matrix normal_basis(const Point& tangent) {
  const Eigen::Index n = tangent.size();
  Eigen::HouseholderQR<Matrix> qr(tangent);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q.rightCols(n - 1);
}

}  // namespace

double tube_limit_value(const Density& p, const AffineLine& line, double t, const Diffeo& thickening,
                        const std::vector<double>& eps, const QuadratureSpec& q) {
  const int n = p.dim();
  if (n != 2 && n != 3) fail(ErrorKind::DimensionMismatch, "tube conditionals support 2 or 3 dimensions");
  if (eps.size() < 3) fail(ErrorKind::DomainError, "need at least three eps values");
  for (size_t i = 1; i < eps.size(); ++i) {
    if (!(eps[i] < eps[i - 1] && eps[i] > 0.0)) fail(ErrorKind::DomainError, "eps must decrease to 0");
  }
  const Point x = line.at(t);
  const Point y0 = thickening.apply(x);
  const double h = 1e-6 * (1.0 + std::abs(t));
  const Point tangent = (thickening.apply(line.at(t + h)) - thickening.apply(line.at(t - h))) / (2.0 * h);
  const double speed = tangent.norm();
  const Matrix N = normal_basis(tangent);

  // density of y = thickening(x)
  auto qy = [&](const Point& y) {
    if (!thickening.in_range(y)) return 0.0;
    const Point xx = thickening.invert(y);
    const double v = p.eval_unnorm(xx);
    return v == 0.0 ? 0.0 : v * thickening.inv_jac_det_abs(y);
  };

  std::vector<double> avg;
  for (double e : eps) {
    double mean;
    if (n == 2) {
      ScalarField f = [&](const Point& z) { return qy(y0 + N.col(0) * z[0]); };
      mean = integrate(f, Box(make_point({-e}), make_point({e})), q).value / (2.0 * e);
    } else {
      // polar coordinates on the normal disk
      ScalarField f = [&](const Point& z) {
        const double r = z[0];
        return r * qy(y0 + N.col(0) * (r * std::cos(z[1])) + N.col(1) * (r * std::sin(z[1])));
      };
      mean = integrate(f, Box(make_point({0.0, 0.0}), make_point({e, 2.0 * M_PI})), q).value / (M_PI * e * e);
    }
    avg.push_back(mean * speed);
  }

  // Neville tableau in eps, extrapolating to eps = 0
  const size_t m = eps.size();
  std::vector<std::vector<double>> T(m, std::vector<double>(m, 0.0));
  for (size_t i = 0; i < m; ++i) {
    T[i][0] = avg[i];
    for (size_t j = 1; j <= i; ++j) {
      T[i][j] = (eps[i - j] * T[i][j - 1] - eps[i] * T[i - 1][j - 1]) / (eps[i - j] - eps[i]);
    }
  }
  const double last = T[m - 1][m - 1], prev = T[m - 2][m - 2];
  if (!std::isfinite(last)) fail(ErrorKind::NonFinite, "tube limit is not finite");
  if (std::abs(last - prev) > 1e-4 * std::max(std::abs(last), 1e-300)) {
    fail(ErrorKind::NoConvergence, "tube limit fails the Cauchy test at 1e-4");
  }
  return last;
}

Density tube_limit_conditional(const Density& p, const AffineLine& line, const Interval& range,
                               const Diffeo& thickening, const std::vector<double>& eps_sequence,
                               const QuadratureSpec& q) {
  if (!(range.hi > range.lo)) fail(ErrorKind::EmptySupport, "empty line range");
  ScalarField f = [=](const Point& t) { return tube_limit_value(p, line, t[0], thickening, eps_sequence, q); };
  return Density(p.name() + "|tube(" + thickening.name() + ")", Box(make_point({range.lo}), make_point({range.hi})), f);
}

double disagreement_score(const Density& c1, const Density& c2, const Interval& domain, int n,
                          const QuadratureSpec& q) {
  if (c1.dim() != 1 || c2.dim() != 1) fail(ErrorKind::DimensionMismatch, "disagreement_score is 1D");
  if (n < 1 || !(domain.hi > domain.lo)) fail(ErrorKind::DomainError, "bad disagreement grid");
  auto mass = [&](const Density& c) {
    return integrate_1d([&](double t) { return c.eval_unnorm(make_point({t})); }, domain.lo, domain.hi, q).value;
  };
  const double z1 = mass(c1), z2 = mass(c2);
  if (!(z1 > 0.0) || !(z2 > 0.0)) fail(ErrorKind::EmptySupport, "conditional has no mass on the grid domain");
  const double h = domain.length() / n;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const Point t = make_point({domain.lo + (i + 0.5) * h});
    const double a = c1.eval_unnorm(t) / z1, b = c2.eval_unnorm(t) / z2;
    if (a == 0.0 && b == 0.0) continue;
    if (a == 0.0 || b == 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(std::log(a / b)));
  }
  return worst;
}

Interval tomography_feasible_interval(const TomographyCase& c) {
  // on v2 = v1 the data are G (1,1)^T / v1
  const Point rows = c.G.rowwise().sum();
  Interval iv{std::max(c.v_box.lo[0], c.v_box.lo[1]), std::min(c.v_box.hi[0], c.v_box.hi[1])};
  for (int i = 0; i < rows.size(); ++i) {
    const auto cut = intersect(iv, Interval{rows[i] / c.data_box.hi[i], rows[i] / c.data_box.lo[i]});
    if (!cut) fail(ErrorKind::EmptyIntersection, "data infeasible on v2 = v1");
    iv = *cut;
  }
  return iv;
}

TomographyConditionals tomography_conditionals(const TomographyCase& c, const QuadratureSpec& q) {
  const Density prior_d = densities::uniform_box(c.data_box);
  const Density prior_v = densities::uniform_box(c.v_box);
  const ForwardModel g_s = linear_forward(c.G, "G");
  const ForwardModel g_v = after(g_s, diffeos::reciprocal(2));
  const AffineLine diag{make_point({0.0, 0.0}), make_point({1.0, 1.0})};

  const Density post_v = graph_posterior(prior_d, prior_v, g_v);
  const Density cond_v = restrict_to_affine(post_v, diag, q).renamed("velocity_route");

  const Density prior_s = pushforward(prior_v, diffeos::reciprocal(2));
  const Density post_s = graph_posterior(prior_d, prior_s, g_s);
  const Density cond_s = restrict_to_affine(post_s, diag, q);
  const Density back = pushforward(cond_s, diffeos::reciprocal(1)).renamed("slowness_route");
  return {cond_v, back, tomography_feasible_interval(c)};
}

}  // namespace bkaudit
