#include "bkaudit/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "bkaudit/condition.hpp"
#include "bkaudit/construct.hpp"
#include "bkaudit/errors.hpp"
#include "bkaudit/evidence.hpp"
#include "bkaudit/geometry.hpp"
#include "bkaudit/hier.hpp"
#include "bkaudit/modal.hpp"
#include "bkaudit/transdim.hpp"

namespace bkaudit {

namespace {

[[noreturn]] void invalid(const std::string& msg) { fail(ErrorKind::ValidationError, msg); }

const Json& field(const Json& j, const std::string& key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) invalid(ctx + ": missing field '" + key + "'");
  return j.at(key);
}

std::string get_string(const Json& j, const std::string& key, const std::string& ctx) {
  const Json& v = field(j, key, ctx);
  if (!v.is_string()) invalid(ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::string opt_string(const Json& j, const std::string& key, const std::string& dflt, const std::string& ctx) {
  return j.contains(key) ? get_string(j, key, ctx) : dflt;
}

double as_number(const Json& v, const std::string& what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end != s.c_str() && *end == '\0') return x;
  }
  invalid(what + " must be a number");
}

double get_number(const Json& j, const std::string& key, const std::string& ctx) {
  return as_number(field(j, key, ctx), ctx + ": field '" + key + "'");
}

double opt_number(const Json& j, const std::string& key, double dflt, const std::string& ctx) {
  return j.contains(key) ? get_number(j, key, ctx) : dflt;
}

int get_int(const Json& j, const std::string& key, const std::string& ctx) {
  const Json& v = field(j, key, ctx);
  if (!v.is_number_integer()) invalid(ctx + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

Point get_point(const Json& j, const std::string& key, const std::string& ctx) {
  const Json& v = field(j, key, ctx);
  if (!v.is_array() || v.empty()) invalid(ctx + ": field '" + key + "' must be a non-empty array");
  Point p(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) p[static_cast<int>(i)] = as_number(v[i], ctx + "." + key);
  return p;
}

Matrix get_matrix(const Json& j, const std::string& key, const std::string& ctx) {
  const Json& v = field(j, key, ctx);
  if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty()) {
    invalid(ctx + ": field '" + key + "' must be a non-empty array of rows");
  }
  const size_t rows = v.size(), cols = v[0].size();
  Matrix M(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array() || v[r].size() != cols) invalid(ctx + ": ragged matrix '" + key + "'");
    for (size_t c = 0; c < cols; ++c) M(r, c) = as_number(v[r][c], ctx + "." + key);
  }
  return M;
}

// line/column of a byte offset, 1-based
std::pair<int, int> line_col(const std::string& text, size_t offset) {
  int line = 1, col = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line, col = 1;
    else ++col;
  }
  return {line, col};
}

// ---------------------------------------------------------------------------
// Object construction

struct Env {
  const Scenario& s;
  std::map<std::string, Density> densities;
  std::map<std::string, ForwardModel> forwards;
  std::map<std::string, std::pair<Diffeo, std::string>> reparams;

  const Density& density(const std::string& name, const std::string& ctx) const {
    auto it = densities.find(name);
    if (it == densities.end()) invalid(ctx + ": unknown density ref '" + name + "'");
    return it->second;
  }
  const ForwardModel& forward(const std::string& name, const std::string& ctx) const {
    auto it = forwards.find(name);
    if (it == forwards.end()) invalid(ctx + ": unknown forward ref '" + name + "'");
    return it->second;
  }
  const std::pair<Diffeo, std::string>& reparam(const std::string& id, const std::string& ctx) const {
    auto it = reparams.find(id);
    if (it == reparams.end()) invalid(ctx + ": unknown reparam ref '" + id + "'");
    return it->second;
  }
};

ForwardModel build_forward(const std::string& name, const Json& j) {
  const std::string ctx = "forward '" + name + "'";
  const std::string kind = get_string(j, "kind", ctx);
  if (kind == "linear") {
    const Matrix G = get_matrix(j, "matrix", ctx);
    if (!j.contains("offset")) return linear_forward(G, name);
    const Point b = get_point(j, "offset", ctx);
    if (b.size() != G.rows()) invalid(ctx + ": offset length must match matrix rows");
    return general_forward(name, static_cast<int>(G.cols()), static_cast<int>(G.rows()),
                           [G, b](const Point& m) { return Point(G * m + b); });
  }
  if (kind == "linear_reciprocal") {
    // d = G (1/m), e.g. travel times from velocities
    const Matrix G = get_matrix(j, "matrix", ctx);
    return general_forward(name, static_cast<int>(G.cols()), static_cast<int>(G.rows()), [G](const Point& m) {
      if ((m.array() <= 0.0).any()) fail(ErrorKind::DomainError, "reciprocal forward needs positive m");
      return Point(G * m.cwiseInverse());
    });
  }
  invalid(ctx + ": unknown kind '" + kind + "'");
}

Density build_density(const std::string& name, const Json& j, const std::map<std::string, ForwardModel>& fwd) {
  const std::string ctx = "density '" + name + "'";
  const std::string kind = get_string(j, "kind", ctx);
  const Json& p = field(j, "params", ctx);
  Density out = [&]() -> Density {
    if (kind == "uniform_box") {
      if (p.contains("center")) {
        const Point c = get_point(p, "center", ctx);
        const double h = get_number(p, "half_width", ctx);
        if (!(h > 0.0)) invalid(ctx + ": half_width must be positive");
        return densities::uniform_box(Box::cube(c, h));
      }
      const Point lo = get_point(p, "lo", ctx), hi = get_point(p, "hi", ctx);
      if (lo.size() != hi.size() || !(hi.array() > lo.array()).all()) invalid(ctx + ": need lo < hi per axis");
      return densities::uniform_box(Box(lo, hi));
    }
    if (kind == "gaussian_diag") {
      const Point m = get_point(p, "mean", ctx), sd = get_point(p, "sd", ctx);
      if (m.size() != sd.size() || !(sd.array() > 0.0).all()) invalid(ctx + ": need positive sd per axis");
      return densities::gaussian_diag(m, sd);
    }
    if (kind == "lognormal_product") {
      const Point mu = get_point(p, "mu", ctx), sg = get_point(p, "sigma", ctx);
      if (mu.size() != sg.size() || !(sg.array() > 0.0).all()) invalid(ctx + ": need positive sigma per axis");
      return densities::lognormal_product(mu, sg);
    }
    if (kind == "tube") {
      const int n = get_int(p, "n", ctx), k = get_int(p, "k", ctx);
      const std::string g = get_string(p, "forward", ctx);
      auto it = fwd.find(g);
      if (it == fwd.end()) invalid(ctx + ": unknown forward ref '" + g + "'");
      if (it->second.m_dim != k || it->second.d_dim != n - k) invalid(ctx + ": forward must map k -> n-k");
      const ForwardModel fm = it->second;
      return densities::tube(n, k, [fm](const Point& x) { return fm(x); }, get_number(p, "sigma", ctx),
                             get_number(p, "amplitude", ctx));
    }
    if (kind == "power_product") {
      // prod (p_i + 1) u_i^p_i on the unit cube
      const Point pw = get_point(p, "powers", ctx);
      if (!(pw.array() >= 0.0).all()) invalid(ctx + ": powers must be >= 0");
      return Density(name, Box::unit(static_cast<int>(pw.size())), [pw](const Point& u) {
        double v = 1.0;
        for (int i = 0; i < pw.size(); ++i) v *= (pw[i] + 1.0) * std::pow(u[i], pw[i]);
        return v;
      }, 1.0);
    }
    invalid(ctx + ": unknown kind '" + kind + "'");
  }();
  return out.renamed(name);
}

Env build_env(const Scenario& s) {
  Env e{s, {}, {}, {}};
  for (const auto& [name, j] : s.forwards.items()) e.forwards.emplace(name, build_forward(name, j));
  for (const auto& [name, j] : s.densities.items()) e.densities.emplace(name, build_density(name, j, e.forwards));
  for (const auto& r : s.reparams) {
    const std::string ctx = "reparam '" + r.id + "'";
    if (r.space != "data" && r.space != "model") invalid(ctx + ": space must be 'data' or 'model'");
    int dim = r.dim;
    if (dim == 0) {
      if (s.forward.empty()) invalid(ctx + ": needs 'dim' when no default forward is declared");
      const ForwardModel& fm = e.forward(s.forward, ctx);
      dim = r.space == "data" ? fm.d_dim : fm.m_dim;
    }
    const auto& ids = diffeo_ids();
    if (std::find(ids.begin(), ids.end(), r.diffeo) == ids.end()) {
      invalid(ctx + ": unknown diffeo '" + r.diffeo + "'");
    }
    e.reparams.emplace(r.id, std::make_pair(diffeo_from_id(r.diffeo, dim), r.space));
  }
  if (!s.prior_d.empty()) e.density(s.prior_d, "prior_d");
  if (!s.prior_m.empty()) e.density(s.prior_m, "prior_m");
  if (!s.forward.empty()) e.forward(s.forward, "forward");
  return e;
}

QuadratureSpec quad_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Requests

struct Ctx {
  const Env& env;
  const std::vector<RequestResult>* earlier;  // null when run alone
};

class Out {
 public:
  explicit Out(RequestResult& r) : r_(r) {}
  void put(const std::string& k, double v) { r_.values.emplace_back(k, v); }
  void flag(const std::string& k, bool b) { put(k, b ? 1.0 : 0.0); }
  void note(const std::string& k, const std::string& v) { r_.notes.emplace_back(k, v); }

 private:
  RequestResult& r_;
};

// scenario quad, or the request's own "quad" block
QuadratureSpec qspec(const Ctx& c, const Json& r) { return r.contains("quad") ? quad_from_json(r.at("quad")) : c.env.s.quad; }

std::string ref_or_default(const Json& r, const std::string& key, const std::string& dflt, const std::string& ctx) {
  const std::string v = opt_string(r, key, dflt, ctx);
  if (v.empty()) invalid(ctx + ": no '" + key + "' given and no scenario default");
  return v;
}

HierCase hier_from(const Json& r, const std::string& ctx) { return hier_case(hier_case_from_name(get_string(r, "case", ctx))); }

TransdimCase transdim_from(const Json& r, const std::string& ctx) {
  TransdimCase tc;
  tc.sigma = opt_number(r, "sigma", tc.sigma, ctx);
  if (!(tc.sigma > 0.0)) invalid(ctx + ": sigma must be positive");
  return tc;
}

double earlier_value(const Ctx& c, const std::string& dotted, const std::string& ctx) {
  if (!c.earlier) invalid(ctx + ": refers to other requests and cannot run alone");
  const auto dot = dotted.find('.');
  const std::string req = dotted.substr(0, dot), key = dot == std::string::npos ? "value" : dotted.substr(dot + 1);
  for (const auto& r : *c.earlier) {
    if (r.name != req) continue;
    if (!r.ok) fail(ErrorKind::ValidationError, ctx + ": request '" + req + "' failed");
    for (const auto& [k, v] : r.values)
      if (k == key) return v;
  }
  invalid(ctx + ": no earlier result '" + dotted + "'");
}

std::vector<std::string> string_list(const Json& r, const std::string& key, const std::string& ctx) {
  const Json& v = field(r, key, ctx);
  std::vector<std::string> out;
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) invalid(ctx + ": field '" + key + "' must be a string or array");
  for (const auto& x : v) {
    if (!x.is_string()) invalid(ctx + ": field '" + key + "' must hold strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

void run_evidence(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const QuadratureSpec q = qspec(c, r);
  const std::string study = opt_string(r, "study", "generic", ctx);
  if (study == "hier") {
    const HierCase hc = hier_from(r, ctx);
    o.put("value", evidence_profile(hc, get_number(r, "sigma", ctx)));
    o.put("err_est", 0.0);
    o.note("method", "closed_form");
    return;
  }
  if (study == "transdim") {
    const TransdimCase tc = transdim_from(r, ctx);
    const std::string coords = get_string(r, "coords", ctx);
    const int k = get_int(r, "k", ctx);
    if (k != 1 && k != 2) invalid(ctx + ": k must be 1 or 2");
    EvidenceResult e;
    if (coords == "cart") e = evidence_cartesian(tc, k);
    else if (coords == "sph") e = evidence_spherical(tc, k, q);
    else invalid(ctx + ": coords must be 'cart' or 'sph'");
    o.put("value", e.value);
    o.put("err_est", e.err_est);
    o.note("method", e.method);
    return;
  }
  if (study != "generic") invalid(ctx + ": unknown study '" + study + "'");
  const Density& pd = c.env.density(ref_or_default(r, "prior_d", c.env.s.prior_d, ctx), ctx);
  const Density& pm = c.env.density(ref_or_default(r, "prior_m", c.env.s.prior_m, ctx), ctx);
  const ForwardModel& fm = c.env.forward(ref_or_default(r, "forward", c.env.s.forward, ctx), ctx);
  const EvidenceResult e = evidence(pd, pm, fm, q, opt_string(r, "label", "", ctx));
  o.put("value", e.value);
  o.put("err_est", e.err_est);
  o.note("method", e.method);
}

void run_bayes_factor(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const std::string num = get_string(r, "num", ctx), den = get_string(r, "den", ctx);
  const double a = earlier_value(c, num + ".value", ctx), b = earlier_value(c, den + ".value", ctx);
  if (b == 0.0) fail(ErrorKind::DivideByZero, ctx + ": denominator evidence is zero");
  const double f = a / b;
  o.put("factor", f);
  o.flag("favours_num", f > 1.0);
  o.note("favored", f > 1.0 ? num : (f < 1.0 ? den : "tie"));
}

// "feasible": the exact feasible set of a uniform data prior under a linear
// forward model; or an explicit {lo, hi} box in model space.
EvidenceRegion region_from(const Json& r, const Density& pd, const Density& pm, const ForwardModel& fm,
                           const std::string& ctx) {
  if (!r.contains("region")) return {};
  const Json& j = r.at("region");
  if (j.is_object()) {
    const Box b(get_point(j, "lo", ctx + ".region"), get_point(j, "hi", ctx + ".region"));
    if (b.dim() != pm.dim()) invalid(ctx + ": region dimension does not match prior_m");
    return {std::nullopt, b};
  }
  if (!j.is_string() || j.get<std::string>() != "feasible") invalid(ctx + ": region must be \"feasible\" or {lo, hi}");
  if (!fm.is_linear() || !pd.uniform_level()) invalid(ctx + ": feasible region needs a linear forward and uniform prior_d");
  const Matrix& G = *fm.linear_matrix;
  const Point lo = pd.support().lo, hi = pd.support().hi;
  if (G.cols() == 2) return {linear_feasible_polygon(G, lo, hi, pm.support()), std::nullopt};
  if (G.cols() == 1) {
    const auto iv = linear_feasible_interval(G, lo, hi, Interval{pm.support().lo[0], pm.support().hi[0]});
    if (!iv) fail(ErrorKind::EmptySupport, ctx + ": feasible set is empty");
    return {std::nullopt, Box(make_point({iv->lo}), make_point({iv->hi}))};
  }
  invalid(ctx + ": feasible region needs a one- or two-parameter model");
}

void run_audit(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const auto& [t, space] = c.env.reparam(get_string(r, "reparam", ctx), ctx);
  const Density& pd = c.env.density(ref_or_default(r, "prior_d", c.env.s.prior_d, ctx), ctx);
  const Density& pm = c.env.density(ref_or_default(r, "prior_m", c.env.s.prior_m, ctx), ctx);
  const ForwardModel& fm = c.env.forward(ref_or_default(r, "forward", c.env.s.forward, ctx), ctx);
  const EvidenceRegion reg = region_from(r, pd, pm, fm, ctx);
  const InvarianceVerdict v = space == "model" ? audit_model_reparam_invariance(pd, pm, fm, t, qspec(c, r), reg)
                                               : audit_data_reparam_invariance(pd, pm, fm, t, qspec(c, r), reg);
  o.put("original", v.original.value);
  o.put("transformed", v.transformed.value);
  o.put("delta", v.delta);
  o.put("tol", v.tol);
  o.put("err_combined", v.original.err_est + v.transformed.err_est);
  o.flag("budget_exceeded", v.original.budget_exceeded || v.transformed.budget_exceeded);
  o.flag("pass", v.pass);
  o.note("space", space);
  o.note("reparam", t.name());
}

void run_mode(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const Density& p = c.env.density(get_string(r, "density", ctx), ctx);
  const Json& bj = field(r, "box", ctx);
  const Box b(get_point(bj, "lo", ctx + ".box"), get_point(bj, "hi", ctx + ".box"));
  if (b.dim() != p.dim()) invalid(ctx + ": box dimension does not match the density");
  auto put_point = [&](const std::string& k, const Point& x) {
    for (int i = 0; i < x.size(); ++i) o.put(k + "_" + std::to_string(i), x[i]);
  };
  if (!r.contains("reparam")) {
    const ModeResult m = find_mode(p, b);
    put_point("argmax", m.argmax);
    o.put("value", m.value);
    o.flag("plateau", m.plateau);
    return;
  }
  const auto& [t, space] = c.env.reparam(get_string(r, "reparam", ctx), ctx);
  (void)space;
  const ModeAudit a = mode_invariance_audit(p, t, b);
  put_point("argmax", a.original.argmax);
  o.put("value", a.original.value);
  put_point("transformed_argmax", a.transformed.argmax);
  o.put("transformed_value", a.transformed.value);
  put_point("back_mapped", a.back_mapped);
  o.put("back_value", p(a.back_mapped));
  o.put("delta", a.delta);
  o.flag("pass", a.pass);
}

double loglog_slope(const Density& c, const std::vector<double>& ts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(ts.size());
  for (double t : ts) {
    const double x = std::log(t), y = std::log(c(make_point({t})));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void run_conditional(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const std::string study = opt_string(r, "study", "generic", ctx);
  if (study == "tomography") {
    const int n = r.contains("grid") ? get_int(r, "grid", ctx) : 200;
    if (n < 2) invalid(ctx + ": grid must be >= 2");
    const TomographyConditionals t = tomography_conditionals({}, qspec(c, r));
    std::vector<double> ts;
    for (int i = 0; i < n; ++i) ts.push_back(t.feasible.lo + (i + 0.5) * t.feasible.length() / n);
    double mx = 0.0, mn = INFINITY;
    for (double x : ts) {
      const double v = t.velocity_route(make_point({x}));
      mx = std::max(mx, v), mn = std::min(mn, v);
    }
    o.put("feasible_lo", t.feasible.lo);
    o.put("feasible_hi", t.feasible.hi);
    o.put("velocity_flatness", mx / mn - 1.0);
    o.put("slowness_slope", loglog_slope(t.slowness_route, ts));
    o.put("disagreement", disagreement_score(t.velocity_route, t.slowness_route, t.feasible, n, qspec(c, r)));
    return;
  }
  if (study != "generic") invalid(ctx + ": unknown study '" + study + "'");
  const Density& p = c.env.density(get_string(r, "density", ctx), ctx);
  const AffineLine line{get_point(r, "point", ctx), get_point(r, "direction", ctx)};
  if (line.point.size() != p.dim() || line.direction.size() != p.dim()) invalid(ctx + ": line dimension");
  const Density cond = restrict_to_affine(p, line, qspec(c, r));
  const Json& at = field(r, "at", ctx);
  if (!at.is_array()) invalid(ctx + ": 'at' must be an array");
  for (size_t i = 0; i < at.size(); ++i) {
    o.put("value_" + std::to_string(i), cond(make_point({as_number(at[i], ctx + ".at")})));
  }
}

void run_tail(const Ctx&, const Json& r, const std::string& ctx, Out& o) {
  const std::string study = opt_string(r, "study", "hier", ctx);
  if (study != "hier") invalid(ctx + ": unknown study '" + study + "'");
  const HierCase hc = hier_from(r, ctx);
  const Json& sj = field(r, "sigma", ctx);
  double sigma = 0.0;
  if (sj.is_string() && sj.get<std::string>() == "optimal") {
    const SigmaOptimum opt = optimize_sigma(hc);
    if (opt.flag != "interior") fail(ErrorKind::SingularEvidence, ctx + ": no interior sigma optimum");
    sigma = opt.sigma;
  } else {
    sigma = as_number(sj, ctx + ": field 'sigma'");
  }
  const double thr = get_number(r, "threshold", ctx);
  const Box reg = hier_region(hc, sigma);
  o.put("sigma", sigma);
  o.put("tail", posterior_tail(hc, sigma, thr));
  o.put("norm_const", posterior_m2_norm_const(hc, sigma));
  o.put("m2_lower", reg.lo[1]);
  o.put("m2_upper", reg.hi[1]);
  o.put("m1_upper", reg.hi[0]);
}

void run_optimize(const Ctx&, const Json& r, const std::string& ctx, Out& o) {
  const std::string study = opt_string(r, "study", "hier", ctx);
  if (study != "hier") invalid(ctx + ": unknown study '" + study + "'");
  const HierCase hc = hier_from(r, ctx);
  Interval br{0.05, 3.0};
  if (r.contains("bracket")) {
    const Point b = get_point(r, "bracket", ctx);
    if (b.size() != 2 || !(b[1] > b[0]) || !(b[0] > 0.0)) invalid(ctx + ": bracket must be [lo, hi] with 0 < lo < hi");
    br = {b[0], b[1]};
  }
  const SigmaOptimum s = optimize_sigma(hc, br);
  o.put("sigma", s.sigma);
  o.put("value", s.value);
  o.flag("boundary_singular", s.flag == "boundary_singular");
  o.note("flag", s.flag);
  if (hc.id == HierCaseId::cart) {
    const double cf = 2.0 * (hc.b * hc.d_obs[2] - hc.c * hc.d_obs[1]) / (hc.b + hc.c);
    o.put("closed_form", cf);
    o.put("closed_form_delta", s.sigma - cf);
  }
}

void run_hyper_table(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const std::string variant = get_string(r, "variant", ctx);
  const double k = get_number(r, "k", ctx);
  if (variant == "discrete") {
    const double pl = opt_number(r, "pi_lambda", 0.5, ctx), pd = opt_number(r, "pi_delta", 0.5, ctx);
    const DiscreteHyperTable t = discrete_hyper_marginals(pl, pd, k);
    const DiscreteHyperTable n = discrete_hyper_marginals_quadrature(pl, pd, k, qspec(c, r));
    double diff = 0.0;
    for (int i = 0; i < 2; ++i) {
      diff = std::max({diff, std::abs(t.lambda_norm[i] - n.lambda_norm[i]), std::abs(t.delta_norm[i] - n.delta_norm[i])});
    }
    o.put("lambda_1", t.lambda_norm[0]);
    o.put("lambda_2", t.lambda_norm[1]);
    o.put("delta_1", t.delta_norm[0]);
    o.put("delta_2", t.delta_norm[1]);
    o.put("dlambda_1_dk", t.dlambda_norm_dk[0]);
    o.put("ddelta_1_dk", t.ddelta_norm_dk[0]);
    o.put("quad_max_diff", diff);
    return;
  }
  if (variant == "gaussian") {
    const GridArgmax g = gaussian_hyper_argmax(k, opt_number(r, "lo", 0.05, ctx), opt_number(r, "hi", 3.0, ctx),
                                               opt_number(r, "step", 0.005, ctx));
    o.put("lambda", g.lambda);
    o.put("delta", g.delta);
    o.put("value", g.value);
    const double qv = gaussian_hyper_posterior_quadrature(k, g.lambda, g.delta);
    o.put("quad_rel_diff", std::abs(qv / g.value - 1.0));
    return;
  }
  invalid(ctx + ": variant must be 'discrete' or 'gaussian'");
}

void run_combine(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const std::string op = get_string(r, "op", ctx);
  const auto a = string_list(r, "a", ctx), b = string_list(r, "b", ctx);
  if (a.size() != b.size() || a.empty()) invalid(ctx + ": 'a' and 'b' must have the same non-zero length");
  if (op == "abs_diff" || op == "max_abs_diff") {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(earlier_value(c, a[i], ctx) - earlier_value(c, b[i], ctx)));
    o.put("value", m);
    return;
  }
  if (op == "ratio") {
    if (a.size() != 1) invalid(ctx + ": ratio takes one key per side");
    const double den = earlier_value(c, b[0], ctx);
    if (den == 0.0) fail(ErrorKind::DivideByZero, ctx + ": zero denominator");
    o.put("value", earlier_value(c, a[0], ctx) / den);
    return;
  }
  invalid(ctx + ": unknown op '" + op + "'");
}

void run_transdim(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const TransdimCase tc = transdim_from(r, ctx);
  const std::string what = get_string(r, "quantity", ctx);
  if (what == "closed_form") {
    const ClosedFormCheck cf = spherical_k2_closed_form();
    o.put("value", cf.value);
    o.flag("log_args_positive", cf.log_args_positive);
    o.put("asinh_two_way_diff", cf.asinh_two_way_diff);
    // quadrature of the same integral: evidence without the data and model
    // normalizations
    const EvidenceResult e = evidence_spherical(tc, 2, qspec(c, r));
    const double quad = e.value * std::pow(2.0 * tc.sigma, 3) * tc.dm * tc.dm;
    o.put("quadrature", quad);
    o.put("rel_diff", std::abs(quad / cf.value - 1.0));
    return;
  }
  if (what == "flip") {
    const TransdimFlip f = transdim_flip(tc, qspec(c, r));
    o.put("cart_factor", f.cartesian.factor);
    o.put("sph_factor", f.spherical.factor);
    o.flag("flip", f.flip);
    o.note("cart_favored", f.cartesian.favored);
    o.note("sph_favored", f.spherical.favored);
    return;
  }
  if (what == "aic") {
    const AicComparison a = transdim_aic(tc, get_string(r, "coords", ctx));
    o.put("aic_k1", a.aic_k1);
    o.put("aic_k2", a.aic_k2);
    o.put("preferred", a.preferred);
    return;
  }
  invalid(ctx + ": quantity must be closed_form, flip or aic");
}

// normalized conditional CDFs of `a` and `b` along the last axis at a few
// slices of the first, max abs difference (2D only)
double ks_slices(const Density& a, const Density& b) {
  const Box& bx = b.support();
  double ks = 0.0;
  for (double f : {0.1, 0.45, 0.9}) {
    const double x0 = bx.lo[0] + f * (bx.hi[0] - bx.lo[0]);
    auto sa = [&](double s) { return a(make_point({x0, s})); };
    auto sb = [&](double s) { return b(make_point({x0, s})); };
    const double lo = bx.lo[1], hi = bx.hi[1];
    const double za = gk_adaptive(sa, lo, hi, 1e-13, 1e-11).value, zb = gk_adaptive(sb, lo, hi, 1e-13, 1e-11).value;
    for (int k = 1; k < 20; ++k) {
      const double y = lo + k * (hi - lo) / 20.0;
      ks = std::max(ks, std::abs(gk_adaptive(sa, lo, y, 1e-13, 1e-11).value / za -
                                 gk_adaptive(sb, lo, y, 1e-13, 1e-11).value / zb));
    }
  }
  return ks;
}

void run_construct(const Ctx& c, const Json& r, const std::string& ctx, Out& o) {
  const std::string what = get_string(r, "what", ctx);
  const QuadratureSpec q = qspec(c, r);
  if (what == "tube") {
    TubeSpec t;
    t.n = get_int(r, "n", ctx);
    t.k = get_int(r, "k", ctx);
    const ForwardModel& fm = c.env.forward(get_string(r, "forward", ctx), ctx);
    if (fm.m_dim != t.k || fm.d_dim != t.n - t.k) invalid(ctx + ": forward must map k -> n-k");
    t.g = [fm](const Point& x) { return fm(x); };
    t.amplitude = opt_number(r, "amplitude", 1.0, ctx);
    const double target = get_number(r, "target", ctx);
    const double V = manifold_volume(t, q);
    t.sigma = sigma_for_evidence(t.n, t.k, t.amplitude, V, target);
    const double got = tube_manifold_integral(t, q);
    o.put("volume", V);
    o.put("sigma", t.sigma);
    o.put("manifold_integral", got);
    o.put("rel_err", std::abs(got / target - 1.0));
    if (r.contains("mass_sigma")) {
      TubeSpec m = t;
      m.sigma = get_number(r, "mass_sigma", ctx);
      o.put("mass", tube_mass(m, q));
    }
    return;
  }
  if (what == "transport") {
    const Density& f = c.env.density(get_string(r, "f", ctx), ctx);
    const Density& g = c.env.density(get_string(r, "g", ctx), ctx);
    if (!g.norm_const()) invalid(ctx + ": target density needs a known normalizing constant");
    const int n = r.contains("grid") ? get_int(r, "grid", ctx) : 50;
    if (n < 1) invalid(ctx + ": grid must be >= 1");
    const Diffeo T = triangular_transport(f, g);
    const Box& gb = g.support();
    const int d = g.dim();
    long long total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    double sup = 0.0;
    for (long long k = 0; k < total; ++k) {
      Point u(d);
      long long rem = k;
      for (int i = 0; i < d; ++i, rem /= n) u[i] = gb.lo[i] + (static_cast<double>(rem % n) + 0.5) * (gb.hi[i] - gb.lo[i]) / n;
      const Point x = T.invert(u);
      // finite-difference Jacobian: the analytic one reproduces g by construction
      sup = std::max(sup, std::abs(f(x) / T.fd_jac_det_abs(x) - g(u)));
    }
    o.put("sup_err", sup);
    if (d == 2) o.put("ks", ks_slices(pushforward(f, T), g));
    return;
  }
  if (what == "any_evidence") {
    const TransdimCase tc = transdim_from(r, ctx);
    const AnyEvidenceResult a = any_evidence_transdim(tc, get_number(r, "target", ctx), opt_number(r, "amplitude", 1.0, ctx), q);
    o.put("target", a.target);
    o.put("base", a.base_evidence);
    o.put("ridge_value", a.ridge_value);
    o.put("tube_sigma", a.tube_sigma);
    o.put("achieved", a.achieved);
    o.put("rel_err", a.rel_err);
    return;
  }
  invalid(ctx + ": what must be tube, transport or any_evidence");
}

using Runner = void (*)(const Ctx&, const Json&, const std::string&, Out&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> m = {
      {"evidence", run_evidence},       {"bayes_factor", run_bayes_factor}, {"audit", run_audit},
      {"mode", run_mode},               {"conditional", run_conditional},   {"tail_prob", run_tail},
      {"optimize", run_optimize},       {"hyper_table", run_hyper_table},   {"combine", run_combine},
      {"transdim", run_transdim},       {"construct", run_construct},
  };
  return m;
}

// Static checks of refs in a request (no computation).
void check_request_refs(const Env& env, const Json& r, const std::set<std::string>& before, const std::string& ctx) {
  const std::string type = get_string(r, "type", ctx);
  if (!runners().count(type)) invalid(ctx + ": unknown request type '" + type + "'");
  for (const char* key : {"prior_d", "prior_m", "density", "f", "g"}) {
    if (r.contains(key)) env.density(get_string(r, key, ctx), ctx);
  }
  if (r.contains("forward")) env.forward(get_string(r, "forward", ctx), ctx);
  if (r.contains("quad")) quad_from_json(r.at("quad"));
  if (r.contains("reparam")) env.reparam(get_string(r, "reparam", ctx), ctx);
  const bool generic = opt_string(r, "study", "generic", ctx) == "generic";
  if ((type == "audit") || (type == "evidence" && generic)) {
    ref_or_default(r, "prior_d", env.s.prior_d, ctx);
    ref_or_default(r, "prior_m", env.s.prior_m, ctx);
    ref_or_default(r, "forward", env.s.forward, ctx);
  }
  if (type == "audit" && !r.contains("reparam")) invalid(ctx + ": missing field 'reparam'");
  auto need_before = [&](const std::string& dotted) {
    const std::string req = dotted.substr(0, dotted.find('.'));
    if (!before.count(req)) invalid(ctx + ": unresolvable ref '" + req + "' (must name an earlier request)");
  };
  if (type == "bayes_factor") {
    need_before(get_string(r, "num", ctx));
    need_before(get_string(r, "den", ctx));
  }
  if (type == "combine") {
    for (const char* side : {"a", "b"})
      for (const auto& k : string_list(r, side, ctx)) need_before(k);
  }
}

Json quad_to_json(const QuadratureSpec& q) {
  Json j = {{"engine", engine_name(q.engine)}, {"rel_tol", q.rel_tol}, {"abs_tol", q.abs_tol}, {"max_evals", q.max_evals}};
  if (q.seed) j["seed"] = *q.seed;
  return j;
}

QuadratureSpec quad_from_json(const Json& j) {
  const std::string ctx = "quad";
  if (!j.is_object()) invalid("quad must be an object");
  QuadratureSpec q;
  try {
    q.engine = engine_from_name(opt_string(j, "engine", engine_name(q.engine), ctx));
  } catch (const AuditError& e) {
    invalid(std::string("quad: ") + e.what());
  }
  q.rel_tol = opt_number(j, "rel_tol", q.rel_tol, ctx);
  q.abs_tol = opt_number(j, "abs_tol", q.abs_tol, ctx);
  if (j.contains("max_evals")) {
    if (!j["max_evals"].is_number_integer()) invalid("quad: max_evals must be an integer");
    q.max_evals = j["max_evals"].get<std::int64_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) invalid("quad: seed must be an integer");
    q.seed = j["seed"].get<std::uint64_t>();
  }
  q.validate();
  return q;
}

bool parse_decimal(const std::string& s, double& out) {
  if (s == "true") return out = 1.0, true;
  if (s == "false") return out = 0.0, true;
  if (s == "inf") return out = INFINITY, true;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return !s.empty() && end != s.c_str() && *end == '\0';
}

Comparison compare(const Expectation& e, const AuditReport& rep) {
  Comparison c;
  c.name = e.name;
  const auto v = rep.value(e.name);
  c.missing = !v;
  c.observed = v.value_or(NAN);
  double x = 0.0;
  if (!e.value.empty()) {
    parse_decimal(e.value, x);
    double tol = 0.0;
    if (!e.tol.empty()) parse_decimal(e.tol, tol);
    double rel = 0.0;
    if (!e.rel_tol.empty()) parse_decimal(e.rel_tol, rel);
    const double allowed = std::max(tol, rel * std::abs(x));
    c.expected = e.value;
    c.tol = !e.rel_tol.empty() ? format_number(allowed) : (e.tol.empty() ? "0" : e.tol);
    c.delta = std::isinf(x) && c.observed == x ? 0.0 : c.observed - x;
    c.pass = !c.missing && std::abs(c.delta) <= allowed;
    return c;
  }
  c.pass = !c.missing;
  c.tol = "0";
  if (!e.min.empty()) {
    parse_decimal(e.min, x);
    c.expected = ">=" + e.min;
    c.delta = c.observed - x;
    c.pass = c.pass && c.observed >= x;
  }
  if (!e.max.empty()) {
    double y = 0.0;
    parse_decimal(e.max, y);
    c.expected = c.expected.empty() ? "<=" + e.max : c.expected + ",<=" + e.max;
    if (e.min.empty()) c.delta = c.observed - y;
    c.pass = c.pass && c.observed <= y;
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Serialization

Scenario scenario_from_json(const Json& j) {
  if (!j.is_object()) invalid("scenario must be a JSON object");
  static const std::set<std::string> known = {"schema",  "id",       "description", "densities", "forwards",
                                              "prior_d", "prior_m",  "forward",     "reparams",  "requests",
                                              "quad",    "expected", "sweeps"};
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!known.count(k)) invalid("unknown top-level field '" + k + "'");
  }
  Scenario s;
  const Json& schema = field(j, "schema", "scenario");
  if (!schema.is_number_integer() || schema.get<int>() != kSchemaVersion) invalid("schema must be 1");
  s.id = get_string(j, "id", "scenario");
  if (s.id.empty()) invalid("scenario: id must not be empty");
  const std::string ctx = "scenario '" + s.id + "'";
  s.description = opt_string(j, "description", "", ctx);
  if (j.contains("densities")) {
    if (!j["densities"].is_object()) invalid(ctx + ": densities must be an object");
    s.densities = j["densities"];
  }
  if (j.contains("forwards")) {
    if (!j["forwards"].is_object()) invalid(ctx + ": forwards must be an object");
    s.forwards = j["forwards"];
  }
  s.prior_d = opt_string(j, "prior_d", "", ctx);
  s.prior_m = opt_string(j, "prior_m", "", ctx);
  s.forward = opt_string(j, "forward", "", ctx);
  if (j.contains("reparams")) {
    if (!j["reparams"].is_array()) invalid(ctx + ": reparams must be an array");
    for (const auto& r : j["reparams"]) {
      ReparamDecl d;
      d.id = get_string(r, "id", ctx + " reparam");
      d.diffeo = get_string(r, "diffeo", ctx + " reparam '" + d.id + "'");
      d.space = get_string(r, "space", ctx + " reparam '" + d.id + "'");
      if (r.contains("dim")) d.dim = get_int(r, "dim", ctx + " reparam '" + d.id + "'");
      s.reparams.push_back(d);
    }
  }
  if (j.contains("requests")) {
    if (!j["requests"].is_array()) invalid(ctx + ": requests must be an array");
    std::set<std::string> names;
    for (const auto& r : j["requests"]) {
      const std::string n = get_string(r, "name", ctx + " request");
      get_string(r, "type", ctx + " request '" + n + "'");
      if (n.empty() || n.find('.') != std::string::npos) invalid(ctx + ": request names must be non-empty without '.'");
      if (!names.insert(n).second) invalid(ctx + ": duplicate request name '" + n + "'");
      s.requests.push_back(r);
    }
  }
  s.quad = j.contains("quad") ? quad_from_json(j["quad"]) : QuadratureSpec{};
  if (j.contains("expected")) {
    const Json& e = j["expected"];
    if (!e.is_object()) invalid(ctx + ": expected must be an object of name -> record");
    for (const auto& [name, rec] : e.items()) {
      const std::string ectx = ctx + " expected '" + name + "'";
      if (!rec.is_object()) invalid(ectx + ": must be an object");
      Expectation x;
      x.name = name;
      for (const auto& [k, v] : rec.items()) {
        if (!v.is_string()) invalid(ectx + ": '" + k + "' must be a decimal string");
        std::string* slot = k == "value"     ? &x.value
                             : k == "tol"     ? &x.tol
                             : k == "rel_tol" ? &x.rel_tol
                             : k == "min"     ? &x.min
                             : k == "max"     ? &x.max
                                              : nullptr;
        if (!slot) invalid(ectx + ": unknown field '" + k + "'");
        *slot = v.get<std::string>();
        double tmp;
        if (!parse_decimal(*slot, tmp)) invalid(ectx + ": '" + k + "' is not a decimal string");
      }
      if (x.value.empty() == (x.min.empty() && x.max.empty())) invalid(ectx + ": give either value or min/max");
      s.expected.push_back(x);
    }
  }
  if (j.contains("sweeps")) {
    const Json& w = j["sweeps"];
    if (!w.is_object()) invalid(ctx + ": sweeps must be an object");
    for (const auto& [param, rec] : w.items()) {
      const std::string wctx = ctx + " sweep '" + param + "'";
      s.sweeps.push_back({param, get_string(rec, "request", wctx), get_string(rec, "field", wctx)});
    }
  }
  return s;
}

Json scenario_to_json(const Scenario& s) {
  Json j;
  j["schema"] = s.schema;
  j["id"] = s.id;
  if (!s.description.empty()) j["description"] = s.description;
  if (!s.densities.empty()) j["densities"] = s.densities;
  if (!s.forwards.empty()) j["forwards"] = s.forwards;
  if (!s.prior_d.empty()) j["prior_d"] = s.prior_d;
  if (!s.prior_m.empty()) j["prior_m"] = s.prior_m;
  if (!s.forward.empty()) j["forward"] = s.forward;
  if (!s.reparams.empty()) {
    Json a = Json::array();
    for (const auto& r : s.reparams) {
      Json x = {{"id", r.id}, {"diffeo", r.diffeo}, {"space", r.space}};
      if (r.dim) x["dim"] = r.dim;
      a.push_back(x);
    }
    j["reparams"] = a;
  }
  j["requests"] = Json::array();
  for (const auto& r : s.requests) j["requests"].push_back(r);
  j["quad"] = quad_to_json(s.quad);
  if (!s.expected.empty()) {
    Json e = Json::object();
    for (const auto& x : s.expected) {
      Json rec = Json::object();
      if (!x.value.empty()) rec["value"] = x.value;
      if (!x.tol.empty()) rec["tol"] = x.tol;
      if (!x.rel_tol.empty()) rec["rel_tol"] = x.rel_tol;
      if (!x.min.empty()) rec["min"] = x.min;
      if (!x.max.empty()) rec["max"] = x.max;
      e[x.name] = rec;
    }
    j["expected"] = e;
  }
  if (!s.sweeps.empty()) {
    Json w = Json::object();
    for (const auto& x : s.sweeps) w[x.param] = {{"request", x.request}, {"field", x.field}};
    j["sweeps"] = w;
  }
  return j;
}

std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

Scenario parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    invalid("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
  Scenario s = scenario_from_json(j);
  validate_scenario(s);
  return s;
}

void validate_scenario(const Scenario& s) {
  s.quad.validate();
  const Env env = build_env(s);
  std::set<std::string> before;
  for (const auto& r : s.requests) {
    const std::string name = get_string(r, "name", "request");
    check_request_refs(env, r, before, "request '" + name + "'");
    before.insert(name);
  }
  for (const auto& e : s.expected) {
    const std::string req = e.name.substr(0, e.name.find('.'));
    if (!before.count(req)) invalid("expected '" + e.name + "': unresolvable ref '" + req + "'");
  }
  for (const auto& w : s.sweeps) {
    if (!before.count(w.request)) invalid("sweep '" + w.param + "': unresolvable ref '" + w.request + "'");
  }
}

// ---------------------------------------------------------------------------
// Running

bool AuditReport::all_requests_ok() const {
  for (const auto& r : results)
    if (!r.ok) return false;
  return true;
}

bool AuditReport::all_golden_pass() const {
  for (const auto& c : comparisons)
    if (!c.pass) return false;
  return true;
}

std::optional<double> AuditReport::value(const std::string& dotted) const {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) return std::nullopt;
  const std::string req = dotted.substr(0, dot), key = dotted.substr(dot + 1);
  for (const auto& r : results) {
    if (r.name != req) continue;
    for (const auto& [k, v] : r.values)
      if (k == key) return v;
  }
  return std::nullopt;
}

namespace {

RequestResult run_with(const Env& env, const Json& request, const std::vector<RequestResult>* earlier) {
  RequestResult res;
  res.name = request.value("name", "");
  res.type = request.value("type", "");
  Out o(res);
  try {
    const auto it = runners().find(res.type);
    if (it == runners().end()) invalid("request '" + res.name + "': unknown type '" + res.type + "'");
    it->second(Ctx{env, earlier}, request, "request '" + res.name + "'", o);
  } catch (const AuditError& e) {
    res.ok = false;
    res.error_kind = error_kind_name(e.kind());
    res.error = e.what();
    res.values.clear();
  }
  return res;
}

}  // namespace

RequestResult run_single_request(const Scenario& s, const Json& request) {
  const Env env = build_env(s);
  return run_with(env, request, nullptr);
}

AuditReport run_scenario(const Scenario& s) {
  validate_scenario(s);
  const auto t0 = std::chrono::steady_clock::now();
  const Env env = build_env(s);
  AuditReport rep;
  rep.id = s.id;
  rep.quad = s.quad;
  for (const auto& r : s.requests) rep.results.push_back(run_with(env, r, &rep.results));
  for (const auto& e : s.expected) rep.comparisons.push_back(compare(e, rep));
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::vector<ProfileRow> run_profile(const Scenario& s, const std::string& param, double lo, double hi, int steps) {
  validate_scenario(s);
  if (steps < 1) invalid("profile: steps must be >= 1");
  if (!std::isfinite(lo) || !std::isfinite(hi)) invalid("profile: range must be finite");
  const Sweep* sw = nullptr;
  for (const auto& w : s.sweeps)
    if (w.param == param) sw = &w;
  if (!sw) {
    std::string known;
    for (const auto& w : s.sweeps) known += (known.empty() ? "" : ", ") + w.param;
    invalid("profile: unknown parameter '" + param + "' for " + s.id + (known.empty() ? "" : " (known: " + known + ")"));
  }
  Json req;
  for (const auto& r : s.requests)
    if (r.at("name") == sw->request) req = r;
  const Env env = build_env(s);
  std::vector<ProfileRow> rows;
  for (int i = 0; i < steps; ++i) {
    const double x = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
    Json r = req;
    r[sw->field] = x;
    const RequestResult res = run_with(env, r, nullptr);
    if (!res.ok) fail(ErrorKind::NoConvergence, "profile at " + format_number(x) + ": " + res.error);
    ProfileRow row{x, NAN, 0.0};
    for (const auto& [k, v] : res.values) {
      if (k == "value") row.value = v;
      if (k == "err_est") row.err_est = v;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bkaudit
