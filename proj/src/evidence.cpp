#include "bkaudit/evidence.hpp"

#include <algorithm>
#include <cmath>

#include "bkaudit/errors.hpp"

namespace bkaudit {

namespace {

// value of a flat density on its support, if it is flat and normalized
std::optional<double> flat_value(const Density& p) {
  if (!p.uniform_level() || !p.norm_const()) return std::nullopt;
  return *p.uniform_level() / *p.norm_const();
}

Box polygon_bbox(const Polygon& poly) {
  Point lo(2), hi(2);
  lo << poly[0].x(), poly[0].y();
  hi = lo;
  for (const auto& v : poly) {
    lo[0] = std::min(lo[0], v.x());
    lo[1] = std::min(lo[1], v.y());
    hi[0] = std::max(hi[0], v.x());
    hi[1] = std::max(hi[1], v.y());
  }
  return Box(lo, hi);
}

std::optional<Box> intersect_boxes(const Box& a, const Box& b) {
  Point lo = a.lo.cwiseMax(b.lo), hi = a.hi.cwiseMin(b.hi);
  for (int i = 0; i < a.dim(); ++i)
    if (!(hi[i] > lo[i])) return std::nullopt;
  return Box(lo, hi);
}

}  // namespace

EvidenceResult evidence(const Density& prior_d, const Density& prior_m, const ForwardModel& fm,
                        const QuadratureSpec& q, const std::string& hyper_label, const EvidenceRegion& region) {
  if (prior_m.dim() != fm.m_dim || prior_d.dim() != fm.d_dim) {
    fail(ErrorKind::DimensionMismatch, "evidence: prior and forward dimensions differ");
  }
  q.validate();
  EvidenceResult out;
  out.engine = q;
  out.hyper_label = hyper_label;

  const auto cd = flat_value(prior_d), cm = flat_value(prior_m);
  if (cd && cm && fm.is_linear() && (fm.m_dim == 1 || fm.m_dim == 2)) {
    const Matrix& G = *fm.linear_matrix;
    const Box& db = prior_d.support();
    const Box& mb = prior_m.support();
    if (fm.m_dim == 1) {
      out.method = "interval";
      const auto iv = linear_feasible_interval(G, db.lo, db.hi, Interval{mb.lo[0], mb.hi[0]});
      out.value = iv ? *cd * *cm * iv->length() : 0.0;
    } else {
      out.method = "polytope";
      const Polygon poly = linear_feasible_polygon(G, db.lo, db.hi, mb);
      const double area = poly.size() >= 3 ? polygon_area(poly) : 0.0;
      out.value = area < 1e-14 ? 0.0 : integrate_indicator_polytope(*cd * *cm, poly);
    }
    return out;
  }

  ScalarField like = [&](const Point& m) { return prior_d(fm.map(m)); };
  EvidenceResult r = evidence_of_likelihood(like, prior_m, q, hyper_label, region);
  if (prior_d.uniform_level() || prior_m.uniform_level()) {
    // Indicator edges can slip between the nodes of a cell whose two local
    // rules then agree; widen err_est by the spread against a second engine.
    QuadratureSpec alt = q;
    alt.engine = q.engine == Engine::tensor_gauss ? Engine::adaptive_subdivision : Engine::tensor_gauss;
    alt.max_evals = std::min<std::int64_t>(q.max_evals, 2'000'000);
    const EvidenceResult b = evidence_of_likelihood(like, prior_m, alt, hyper_label, region);
    r.err_est = std::max(r.err_est, std::abs(r.value - b.value));
    r.method = "quadrature_discontinuous";
  }
  return r;
}

EvidenceResult evidence_of_likelihood(const ScalarField& likelihood, const Density& prior_m,
                                      const QuadratureSpec& q, const std::string& hyper_label,
                                      const EvidenceRegion& region) {
  q.validate();
  EvidenceResult out;
  out.engine = q;
  out.hyper_label = hyper_label;
  out.method = "quadrature";
  ScalarField f = [&](const Point& m) {
    const double pm = prior_m(m);
    if (pm == 0.0) return 0.0;
    try {
      return likelihood(m) * pm;
    } catch (const AuditError& e) {
      // forward image outside the data chart carries no data density
      if (e.kind() == ErrorKind::DomainError) return 0.0;
      throw;
    }
  };
  IntegrationResult r;
  if (region.polygon && prior_m.dim() == 2) {
    r = integrate_polygon(f, *region.polygon, q);
  } else {
    Box b = prior_m.support();
    if (region.box) {
      const auto cut = intersect_boxes(b, *region.box);
      if (!cut) return out;
      b = *cut;
    }
    r = integrate(f, b, q);
  }
  out.value = r.value;
  out.err_est = r.err_est;
  out.budget_exceeded = r.budget_exceeded;
  if (out.value < 0.0) out.value = 0.0;
  return out;
}

BayesFactorReport bayes_factor(const EvidenceResult& num, const EvidenceResult& den) {
  if (!(den.value > 0.0)) fail(ErrorKind::DivideByZero, "Bayes factor with zero denominator evidence");
  BayesFactorReport r{num, den, num.value / den.value, ""};
  if (std::abs(r.factor - 1.0) < 1e-9) {
    r.favored = "tie";
  } else {
    r.favored = r.factor > 1.0 ? num.hyper_label : den.hyper_label;
  }
  return r;
}

namespace {

InvarianceVerdict verdict(EvidenceResult a, EvidenceResult b) {
  InvarianceVerdict v{std::move(a), std::move(b), 0.0, 0.0, false};
  v.delta = std::abs(v.original.value - v.transformed.value);
  v.tol = 3.0 * (v.original.err_est + v.transformed.err_est) +
          1e-12 * std::max(std::abs(v.original.value), std::abs(v.transformed.value));
  v.pass = v.delta <= v.tol;
  return v;
}

}  // namespace

InvarianceVerdict audit_model_reparam_invariance(const Density& prior_d, const Density& prior_m,
                                                 const ForwardModel& fm, const Diffeo& t,
                                                 const QuadratureSpec& q, const EvidenceRegion& region) {
  if (!t.box_ok(prior_m.support())) fail(ErrorKind::DomainError, t.name() + " is not valid on the model prior");
  EvidenceResult base = evidence(prior_d, prior_m, fm, q, "original", region);
  // the region moves with the model coordinates; keep only its bounding box
  EvidenceRegion moved;
  std::optional<Box> bb = region.box;
  if (region.polygon && region.polygon->size() >= 3) bb = polygon_bbox(*region.polygon);
  if (bb) {
    if (auto cut = intersect_boxes(prior_m.support(), *bb)) moved.box = t.image_box(*cut);
  }
  EvidenceResult other = evidence(prior_d, pushforward(prior_m, t), in_model_coords(fm, t), q,
                                  "model:" + t.name(), moved);
  return verdict(std::move(base), std::move(other));
}

InvarianceVerdict audit_data_reparam_invariance(const Density& prior_d, const Density& prior_m,
                                                const ForwardModel& fm, const Diffeo& t,
                                                const QuadratureSpec& q, const EvidenceRegion& region) {
  EvidenceResult base = evidence(prior_d, prior_m, fm, q, "original", region);
  if (t.dim() != fm.d_dim) fail(ErrorKind::DimensionMismatch, "data reparameterization dimension");
  // pushed-forward data density at t(g(m)), via the forward Jacobian so that
  // t need not be invertible on the whole data support
  ScalarField like = [&](const Point& m) { return pushforward_along(prior_d, t, fm.map(m)); };
  EvidenceResult other = evidence_of_likelihood(like, prior_m, q, "data:" + t.name(), region);
  return verdict(std::move(base), std::move(other));
}

double aic(int k, double max_likelihood) {
  if (!(max_likelihood > 0.0)) fail(ErrorKind::NonPositiveLikelihood, "AIC needs a positive likelihood");
  return 2.0 * k - 2.0 * std::log(max_likelihood);
}

}  // namespace bkaudit
