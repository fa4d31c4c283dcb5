#include <cmath>
#include <random>

#include "bkaudit/errors.hpp"
#include "bkaudit/evidence.hpp"
#include "bkaudit/hier.hpp"
#include "doctest.h"

using namespace bkaudit;

namespace {

Density data_prior(const HierCase& hc, double s) { return densities::uniform_box(Box::cube(hc.d_obs, s)); }

std::vector<Point> sample_region(const Box& b, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  for (int i = 0; i < n; ++i) {
    Point m(2);
    for (int j = 0; j < 2; ++j) m[j] = std::uniform_real_distribution<double>(b.lo[j], b.hi[j])(rng);
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("Case 1 closed form against the polytope area") {
  const HierCase hc = hier_case(HierCaseId::cart);
  for (double s : {0.25, 0.3, 7.0 / 15.0, 0.6}) {
    const EvidenceResult e = evidence(data_prior(hc, s), densities::uniform_box(hier_model_box(hc)),
                                      linear_forward(hier_forward_matrix(hc)), {});
    CHECK(e.method == "polytope");
    CHECK(std::abs(e.value - evidence_profile(hc, s)) < 1e-13 * e.value);
    const Box r = hier_region(hc, s);
    CHECK(std::abs(r.volume() / (8 * s * s * s * 100) - e.value) < 1e-13 * e.value);
  }
  const double th = feasibility_threshold(hc);
  CHECK(std::abs(th - 0.7 / 3.0) < 1e-15);
  CHECK(evidence_profile(hc, 0.2) == 0.0);
  CHECK_THROWS_AS(hier_region(hc, 0.2), AuditError);
}

TEST_CASE("profile derivatives match finite differences") {
  for (auto id : {HierCaseId::cart, HierCaseId::tan, HierCaseId::square}) {
    const HierCase hc = hier_case(id);
    for (double s : {0.3, 0.5, 0.9, 1.2}) {
      const double h = 1e-6;
      const double fd = (evidence_profile(hc, s + h) - evidence_profile(hc, s - h)) / (2 * h);
      INFO(hier_case_name(id) << " " << s);
      CHECK(std::abs(evidence_profile_derivative(hc, s) - fd) < 1e-7 * (1 + std::abs(fd)));
    }
  }
  const HierCase sq = hier_case(HierCaseId::square);
  CHECK_THROWS_AS(evidence_profile(sq, 1.5), AuditError);
  CHECK_THROWS_AS(evidence_profile(sq, 0.0), AuditError);
}

TEST_CASE("evidence-maximizing sigma") {
  const HierCase cart = hier_case(HierCaseId::cart);
  const SigmaOptimum o1 = optimize_sigma(cart);
  const double closed = 2 * (cart.b * cart.d_obs[2] - cart.c * cart.d_obs[1]) / (cart.b + cart.c);
  CHECK(o1.flag == "interior");
  CHECK(std::abs(o1.sigma - closed) < 1e-12);
  CHECK(std::abs(evidence_profile_derivative(cart, closed)) < 1e-6);

  const SigmaOptimum o2 = optimize_sigma(hier_case(HierCaseId::tan));
  CHECK(o2.flag == "interior");
  CHECK(std::abs(evidence_profile_derivative(hier_case(HierCaseId::tan), o2.sigma)) < 1e-9);
  CHECK(std::abs(o2.sigma - 1.68672) < 1e-5);  // d1 = 1.5 (see notes on d1 = 1.1)
  HierCase alt = hier_case(HierCaseId::tan);
  alt.d_obs[0] = 1.1;
  CHECK(std::abs(optimize_sigma(alt).sigma - 1.02932) < 1e-5);

  const SigmaOptimum o3 = optimize_sigma(hier_case(HierCaseId::square));
  CHECK(o3.flag == "boundary_singular");
  CHECK(o3.sigma == 1.5);
  CHECK(std::isinf(o3.value));
  // with a bracket short of d1 the maximum is interior (local) or at the end
  CHECK_THROWS_AS(optimize_sigma(cart, Interval{0.05, 0.3}), AuditError);
  CHECK_THROWS_AS(optimize_sigma(cart, Interval{0.05, 0.2}), AuditError);
}

TEST_CASE("transformed data prior along the forward graph gives the case likelihoods") {
  const double s = 0.3;
  for (auto id : {HierCaseId::cart, HierCaseId::tan, HierCaseId::square}) {
    const HierCase hc = hier_case(id);
    const Density pd = data_prior(hc, s);
    const Diffeo T = hier_data_transform(hc);
    const Matrix G = hier_forward_matrix(hc);
    const Box region = hier_region(hc, s);
    int used = 0;
    for (const Point& m : sample_region(region, 300, 11)) {
      const Point g = G * m;
      if (!T.in_domain(g)) continue;  // tan chart ends at pi/2
      ++used;
      const double want = hier_likelihood(hc, s, m);
      const double got = pushforward_along(pd, T, g);
      INFO(hier_case_name(id));
      CHECK(std::abs(got - want) < 1e-10 * want);
    }
    CHECK(used > 100);
  }
  // through the inverse map: square on the paper data, tan with d1 inside the chart
  for (auto id : {HierCaseId::square, HierCaseId::tan}) {
    HierCase hc = hier_case(id);
    if (id == HierCaseId::tan) hc.d_obs[0] = 1.0;
    const Density pd = data_prior(hc, s);
    const Diffeo T = hier_data_transform(hc);
    const Density q = pushforward(pd, T);
    for (const Point& m : sample_region(hier_region(hc, s), 200, 5)) {
      const double want = hier_likelihood(hc, s, m);
      CHECK(std::abs(q(T.apply(hier_forward_matrix(hc) * m)) - want) < 1e-10 * want);
    }
  }
  // off the feasible set
  CHECK(hier_likelihood(hier_case(HierCaseId::tan), s, make_point({0.0, 0.0})) == 0.0);
}

TEST_CASE("closed-form profiles integrate the case likelihoods") {
  QuadratureSpec q;
  q.engine = Engine::tensor_gauss;
  q.rel_tol = 1e-11;
  for (auto id : {HierCaseId::cart, HierCaseId::tan, HierCaseId::square}) {
    const HierCase hc = hier_case(id);
    for (double s : {0.3, 0.55}) {
      const Box r = hier_region(hc, s);
      const IntegrationResult ir =
          integrate([&](const Point& m) { return hier_likelihood(hc, s, m); }, r, q);
      const double num = ir.value / (hc.dm * hc.dm);
      INFO(hier_case_name(id) << " " << s);
      CHECK(std::abs(num - evidence_profile(hc, s)) < 1e-9 * num);
    }
  }
}

TEST_CASE("posterior tails and the m2 normalization") {
  const HierCase cart = hier_case(HierCaseId::cart);
  const double s1 = 7.0 / 15.0;
  CHECK(posterior_tail(cart, s1, 0.5) == 1.0);
  CHECK(posterior_tail(cart, s1, 2.0) == 0.0);
  // m2 spans [d1 - s, d1 + s] = [1.0333, 1.9667]
  CHECK(std::abs(posterior_tail(cart, s1, 1.6) - (1.5 + s1 - 1.6) / (2 * s1)) < 1e-14);

  const HierCase tan = hier_case(HierCaseId::tan);
  const double s2 = 1.02932;
  CHECK(std::abs(posterior_m2_norm_const(tan, s2) - 1.689) < 5e-3);
  QuadratureSpec q;
  q.rel_tol = 1e-12;
  q.abs_tol = 1e-15;
  const double lo = 1.5 - s2, hi = 1.5 + s2;
  const double mass = integrate_1d([](double m) { return std::cos(m) * std::cos(m); }, lo, hi, q).value;
  CHECK(std::abs(posterior_m2_norm_const(tan, s2) * mass - 1.0) < 1e-10);
  const double tail = integrate_1d([](double m) { return std::cos(m) * std::cos(m); }, 1.6, hi, q).value / mass;
  CHECK(std::abs(posterior_tail(tan, s2, 1.6) - tail) < 1e-10);

  const HierCase sq = hier_case(HierCaseId::square);
  CHECK(std::abs(posterior_tail(sq, 0.5, 1.6) - std::log(2.0 / 1.6) / std::log(2.0)) < 1e-14);
}

TEST_CASE("discrete hyper-posterior marginals") {
  const DiscreteHyperTable t = discrete_hyper_marginals(0.5, 0.5, 1.0);
  CHECK(std::abs(t.lambda[0] - 0.11512) < 1e-4);
  QuadratureSpec q;
  q.rel_tol = 1e-12;
  q.abs_tol = 1e-15;
  for (double k : {0.3, 1.0, 2.0, -1.5}) {
    const DiscreteHyperTable a = discrete_hyper_marginals(0.3, 0.6, k);
    const DiscreteHyperTable b = discrete_hyper_marginals_quadrature(0.3, 0.6, k, q);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(a.lambda[i] - b.lambda[i]) < 1e-10);
      CHECK(std::abs(a.delta[i] - b.delta[i]) < 1e-10);
      for (int j = 0; j < 2; ++j) CHECK(std::abs(a.cell[i][j] - b.cell[i][j]) < 1e-10);
    }
    CHECK(std::abs(a.lambda_norm[0] + a.lambda_norm[1] - 1.0) < 1e-14);
  }
  const DiscreteHyperTable only1 = discrete_hyper_marginals(1.0, 0.5, 3.0);
  CHECK(only1.lambda[1] == 0.0);
  CHECK(only1.lambda_norm[0] == 1.0);

  const DiscreteHyperTable t2 = discrete_hyper_marginals(0.5, 0.5, 2.0);
  CHECK(std::abs(t.lambda_norm[0] - t2.lambda_norm[0]) > 1e-3);
  CHECK(std::abs(t.delta_norm[0] - t2.delta_norm[0]) > 1e-3);
  CHECK(std::abs(t.dlambda_norm_dk[0]) > 1e-4);
  CHECK(std::abs(t.ddelta_norm_dk[0]) > 1e-4);
  const DiscreteHyperTable tp = discrete_hyper_marginals(0.5, 0.5, 1.001);
  CHECK(std::abs((tp.lambda_norm[0] - t.lambda_norm[0]) / 0.001 - t.dlambda_norm_dk[0]) < 1e-3);
  CHECK_THROWS_AS(discrete_hyper_marginals(1.2, 0.5, 1.0), AuditError);
}

TEST_CASE("Gaussian hyper-posterior") {
  const double pi = 3.14159265358979323846;
  for (double l : {0.3, 1.0, 2.2}) {
    for (double d : {0.4, 1.0}) {
      const double want = std::exp(-(l * l + d * d) / 2) / (4 * pi * pi * l * d) *
                          std::sqrt(2 * pi / (1 / (l * l) + 1 / (d * d)));
      CHECK(std::abs(gaussian_hyper_posterior(1.0, l, d) - want) < 1e-15);
      for (double k : {0.5, 1.0, 2.0}) {
        const double a = gaussian_hyper_posterior(k, l, d), b = gaussian_hyper_posterior_quadrature(k, l, d);
        CHECK(std::abs(a - b) < 1e-9 * a);
      }
    }
  }
  const GridArgmax g1 = gaussian_hyper_argmax(1.0), g2 = gaussian_hyper_argmax(2.0);
  CHECK(std::max(std::abs(g1.lambda - g2.lambda), std::abs(g1.delta - g2.delta)) > 0.05);
  CHECK(std::abs(g2.delta - 0.455) < 1e-9);

  // lambda -> 0 approaches a finite positive limit
  const double lim = std::sqrt(2 * pi) * std::exp(-0.5) / (4 * pi * pi);
  CHECK(std::abs(gaussian_hyper_posterior(1.0, 1e-3, 1.0) - lim) < 1e-5);
  CHECK(std::abs(gaussian_hyper_posterior(1.0, 1e-2, 1.0) - lim) < 1e-4);

  const double h = 1e-5;
  const double fd = (gaussian_hyper_posterior(1.0 + h, 1.0, 1.0) - gaussian_hyper_posterior(1.0 - h, 1.0, 1.0)) / (2 * h);
  const double fd2 = (gaussian_hyper_posterior(2.0 + h, 1.0, 1.0) - gaussian_hyper_posterior(2.0 - h, 1.0, 1.0)) / (2 * h);
  CHECK(std::abs(fd) > 1e-4);
  CHECK(std::abs(fd2) > 1e-4);
  CHECK_THROWS_AS(gaussian_hyper_posterior(1.0, 0.0, 1.0), AuditError);
}
