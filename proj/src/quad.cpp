#include "bkaudit/quad.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>

#include "bkaudit/errors.hpp"
#include "bkaudit/parallel.hpp"

namespace bkaudit {

std::string engine_name(Engine e) {
  switch (e) {
    case Engine::tensor_gauss: return "tensor_gauss";
    case Engine::adaptive_subdivision: return "adaptive_subdivision";
    case Engine::monte_carlo: return "monte_carlo";
  }
  return "?";
}

Engine engine_from_name(const std::string& s) {
  if (s == "tensor_gauss") return Engine::tensor_gauss;
  if (s == "adaptive_subdivision") return Engine::adaptive_subdivision;
  if (s == "monte_carlo") return Engine::monte_carlo;
  fail(ErrorKind::ValidationError, "unknown quadrature engine '" + s + "'");
}

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) fail(ErrorKind::ValidationError, "tolerances must be > 0");
  if (max_evals < 100) fail(ErrorKind::ValidationError, "max_evals must be >= 100");
  if (engine == Engine::monte_carlo && !seed) {
    fail(ErrorKind::ValidationError, "seed is mandatory for monte_carlo");
  }
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    r.x[n - 1 - i] = z;
    r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

namespace {

double tolerance(const QuadratureSpec& q, double value) {
  return std::max(q.abs_tol, q.rel_tol * std::abs(value));
}

IntegrationResult run_tensor(const ScalarField& f, const Box& b, const QuadratureSpec& q) {
  const int d = b.dim();
  const int order = kernels::kTensorOrder;
  auto nodes = [&](int panels) {
    double n = 1.0;
    for (int i = 0; i < d; ++i) n *= static_cast<double>(panels) * order;
    return n;
  };
  IntegrationResult r;
  int panels = 1;
  double prev = kernels::tensor_gauss(f, b, panels, order);
  r.evals = static_cast<std::int64_t>(nodes(panels));
  r.value = prev;
  r.err_est = std::numeric_limits<double>::infinity();
  while (true) {
    const int next = panels * 2;
    if (static_cast<double>(r.evals) + nodes(next) > static_cast<double>(q.max_evals)) {
      r.budget_exceeded = true;
      break;
    }
    const double cur = kernels::tensor_gauss(f, b, next, order);
    r.evals += static_cast<std::int64_t>(nodes(next));
    r.err_est = std::abs(cur - prev);
    r.value = cur;
    panels = next;
    prev = cur;
    if (r.err_est <= tolerance(q, cur)) break;
  }
  return r;
}

IntegrationResult run_mc(const ScalarField& f, const Box& b, const QuadratureSpec& q) {
  const std::int64_t block = std::min<std::int64_t>(kernels::kMcBlock, q.max_evals);
  const std::int64_t max_blocks = std::max<std::int64_t>(1, q.max_evals / block);
  const std::int64_t round = 16;
  const double vol = b.volume();
  kernels::McMoments acc;
  std::vector<double> sums, sumsqs;
  std::int64_t done = 0;
  IntegrationResult r;
  while (done < max_blocks) {
    const std::int64_t nb = std::min(round, max_blocks - done);
    auto m = kernels::monte_carlo(f, b, *q.seed, done, nb, block);
    sums.push_back(m.sum);
    sumsqs.push_back(m.sumsq);
    done += nb;
    const double n = static_cast<double>(done * block);
    const double s = parallel::pairwise_sum(sums);
    const double s2 = parallel::pairwise_sum(sumsqs);
    const double mean = s / n;
    const double var = n > 1 ? std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0)) : 0.0;
    r.value = vol * mean;
    r.err_est = vol * std::sqrt(var / n);
    r.evals = done * block;
    if (r.err_est <= tolerance(q, r.value) && done >= round) return r;
  }
  r.budget_exceeded = r.err_est > tolerance(q, r.value);
  return r;
}

struct Region {
  Box box;
  kernels::RegionEstimate est;
  bool alive = true;
};

IntegrationResult run_adaptive(const ScalarField& f, const Box& b, const QuadratureSpec& q) {
  const int d = b.dim();
  const std::int64_t per = kernels::region_rule_evals(d);
  const size_t batch = 16;
  std::vector<Region> regions;
  regions.push_back({b, kernels::region_rule(f, b), true});
  using Key = std::pair<double, std::int64_t>;  // (err, -id): ties pop the oldest
  std::priority_queue<Key> heap;
  heap.push({regions[0].est.err, 0});
  double total_val = regions[0].est.value;
  double total_err = regions[0].est.err;
  IntegrationResult r;
  r.evals = per;

  while (total_err > tolerance(q, total_val)) {
    if (r.evals + static_cast<std::int64_t>(2 * batch) * per > q.max_evals) {
      r.budget_exceeded = true;
      break;
    }
    std::vector<size_t> picked;
    while (!heap.empty() && picked.size() < batch) {
      picked.push_back(static_cast<size_t>(-heap.top().second));
      heap.pop();
    }
    if (picked.empty()) break;
    std::vector<Region> kids(2 * picked.size());
    for (size_t k = 0; k < picked.size(); ++k) {
      Region& p = regions[picked[k]];
      p.alive = false;
      total_val -= p.est.value;
      total_err -= p.est.err;
      const int ax = p.est.split_axis;
      const double mid = 0.5 * (p.box.lo[ax] + p.box.hi[ax]);
      Box lo = p.box, hi = p.box;
      lo.hi[ax] = mid;
      hi.lo[ax] = mid;
      kids[2 * k].box = lo;
      kids[2 * k + 1].box = hi;
    }
    bool bad = false;
#pragma omp parallel for schedule(dynamic, 1)
    for (size_t k = 0; k < kids.size(); ++k) {
      try {
        kids[k].est = kernels::region_rule(f, kids[k].box);
      } catch (...) {
#pragma omp atomic write
        bad = true;
      }
    }
    if (bad) fail(ErrorKind::NaNEncountered, "integrand returned NaN");
    for (auto& k : kids) {
      total_val += k.est.value;
      total_err += k.est.err;
      heap.push({k.est.err, -static_cast<std::int64_t>(regions.size())});
      regions.push_back(std::move(k));
    }
    r.evals += static_cast<std::int64_t>(kids.size()) * per;
  }
  std::vector<double> vals, errs;
  vals.reserve(regions.size());
  for (const auto& reg : regions) {
    if (!reg.alive) continue;
    vals.push_back(reg.est.value);
    errs.push_back(reg.est.err);
  }
  r.value = parallel::pairwise_sum(vals);
  r.err_est = parallel::pairwise_sum(errs);
  return r;
}

}  // namespace

IntegrationResult integrate(const ScalarField& f, const Box& b, const QuadratureSpec& q) {
  q.validate();
  switch (q.engine) {
    case Engine::tensor_gauss: return run_tensor(f, b, q);
    case Engine::monte_carlo: return run_mc(f, b, q);
    case Engine::adaptive_subdivision: return run_adaptive(f, b, q);
  }
  return {};
}

IntegrationResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                               const QuadratureSpec& q) {
  ScalarField g = [&f](const Point& x) { return f(x[0]); };
  return integrate(g, Box(make_point({a}), make_point({b})), q);
}

double integrate_indicator_polytope(double c, const Polygon& verts) {
  const double a = polygon_area(verts);
  if (a < 1e-14) fail(ErrorKind::DegeneratePolygon, "polygon area below 1e-14");
  return c * a;
}

IntegrationResult integrate_polygon(const ScalarField& f, const Polygon& poly,
                                    const QuadratureSpec& q) {
  const double area = polygon_area(poly);
  if (poly.size() < 3 || area < 1e-14) fail(ErrorKind::DegeneratePolygon, "polygon area below 1e-14");
  const Box unit = Box::unit(2);
  auto add = [](IntegrationResult& acc, const IntegrationResult& part) {
    acc.value += part.value;
    acc.err_est += part.err_est;
    acc.evals += part.evals;
    acc.budget_exceeded = acc.budget_exceeded || part.budget_exceeded;
  };
  IntegrationResult out;
  if (poly.size() == 4 && (poly[0] + poly[2] - poly[1] - poly[3]).norm() < 1e-12 * (1.0 + poly[0].norm())) {
    const Vec2 o = poly[0], a = poly[1] - poly[0], c = poly[3] - poly[0];
    const double jac = std::abs(a.x() * c.y() - a.y() * c.x());
    ScalarField g = [&](const Point& uv) {
      Point x(2);
      x << o.x() + uv[0] * a.x() + uv[1] * c.x(), o.y() + uv[0] * a.y() + uv[1] * c.y();
      return f(x) * jac;
    };
    return integrate(g, unit, q);
  }
  QuadratureSpec sub = q;
  sub.abs_tol = q.abs_tol / static_cast<double>(poly.size() - 2);
  for (size_t i = 1; i + 1 < poly.size(); ++i) {
    const Vec2 A = poly[0], B = poly[i], C = poly[i + 1];
    const double tri2 = std::abs((B - A).x() * (C - A).y() - (B - A).y() * (C - A).x());
    if (tri2 < 1e-300) continue;
    ScalarField g = [&, A, B, C, tri2](const Point& uv) {
      const Vec2 p = A + uv[0] * (B - A) + uv[0] * uv[1] * (C - B);
      Point x(2);
      x << p.x(), p.y();
      return f(x) * tri2 * uv[0];
    };
    add(out, integrate(g, unit, sub));
  }
  return out;
}

IntegrationResult gk_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol, std::int64_t max_evals) {
  ScalarField g = [&f](const Point& x) { return f(x[0]); };
  struct Seg {
    double lo, hi;
    kernels::RegionEstimate est;
  };
  auto eval = [&](double lo, double hi) {
    return kernels::region_rule(g, Box(make_point({lo}), make_point({hi})));
  };
  IntegrationResult r;
  if (!(a < b)) return r;
  std::vector<Seg> segs{{a, b, eval(a, b)}};
  using Key = std::pair<double, std::int64_t>;
  std::priority_queue<Key> heap;
  heap.push({segs[0].est.err, 0});
  std::vector<bool> alive{true};
  double tv = segs[0].est.value, te = segs[0].est.err;
  r.evals = 15;
  while (te > std::max(abs_tol, rel_tol * std::abs(tv))) {
    if (r.evals + 30 > max_evals) {
      r.budget_exceeded = true;
      break;
    }
    const size_t i = static_cast<size_t>(-heap.top().second);
    heap.pop();
    alive[i] = false;
    const Seg s = segs[i];
    const double mid = 0.5 * (s.lo + s.hi);
    if (!(mid > s.lo && mid < s.hi)) {  // interval exhausted in floating point
      alive[i] = true;
      break;
    }
    tv -= s.est.value;
    te -= s.est.err;
    for (int k = 0; k < 2; ++k) {
      Seg c{k == 0 ? s.lo : mid, k == 0 ? mid : s.hi, {}};
      c.est = eval(c.lo, c.hi);
      tv += c.est.value;
      te += c.est.err;
      heap.push({c.est.err, -static_cast<std::int64_t>(segs.size())});
      segs.push_back(c);
      alive.push_back(true);
    }
    r.evals += 30;
  }
  std::vector<double> vals, errs;
  for (size_t i = 0; i < segs.size(); ++i) {
    if (!alive[i]) continue;
    vals.push_back(segs[i].est.value);
    errs.push_back(segs[i].est.err);
  }
  r.value = parallel::pairwise_sum(vals);
  r.err_est = parallel::pairwise_sum(errs);
  return r;
}

}  // namespace bkaudit
