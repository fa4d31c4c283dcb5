#pragma once

#include <string>

#include "bkaudit/coords.hpp"
#include "bkaudit/geometry.hpp"
#include "bkaudit/quad.hpp"
#include "bkaudit/types.hpp"

namespace bkaudit {

// Three data, two parameters: d = (a m2, b m1, c m1), uniform data cube of
// half-width sigma, uniform model prior of edge dm. The case id selects how
// the first datum is parameterized: as is, tan(d1), or d1^2.
enum class HierCaseId { cart, tan, square };

std::string hier_case_name(HierCaseId id);
HierCaseId hier_case_from_name(const std::string& s);

struct HierCase {
  HierCaseId id = HierCaseId::cart;
  Point d_obs = make_point({1.5, 1.1, 0.9});
  double a = 1.0;
  double b = 1.0;
  double c = 0.5;
  double dm = 10.0;  // model prior [-dm/2, dm/2]^2
};

HierCase hier_case(HierCaseId id);
Matrix hier_forward_matrix(const HierCase& hc);
Diffeo hier_data_transform(const HierCase& hc);
Box hier_model_box(const HierCase& hc);

// Below this sigma the feasible set is empty.
double feasibility_threshold(const HierCase& hc);
// m1 extent of the feasible set, (d2+s)/b - (d3-s)/c; negative when empty.
double feasible_width(const HierCase& hc, double sigma);
// Feasible parameter rectangle, m1 x m2. EmptySupport below the threshold.
Box hier_region(const HierCase& hc, double sigma);

// Closed-form likelihood of the case at m (zero off the feasible set).
double hier_likelihood(const HierCase& hc, double sigma, const Point& m);

// Closed-form evidence as a function of sigma, and its sigma-derivative.
// Zero below the feasibility threshold; SingularEvidence for the squared
// case at sigma >= d1.
double evidence_profile(const HierCase& hc, double sigma);
double evidence_profile_derivative(const HierCase& hc, double sigma);

struct SigmaOptimum {
  double sigma = 0.0;
  double value = 0.0;
  std::string flag;  // "interior" or "boundary_singular"
};

// Grid scan, Brent (golden-section + parabolic) refinement, then a root
// polish on the analytic derivative.
SigmaOptimum optimize_sigma(const HierCase& hc, const Interval& bracket = {0.05, 3.0});

// Posterior over the feasible rectangle at sigma: m1 uniform, m2 with the
// case's likelihood shape. Tail is P(m2 > threshold).
double posterior_tail(const HierCase& hc, double sigma, double threshold);
// Constant C with posterior m2-marginal C * shape(m2): 1, cos^2(a m2), 1/m2.
double posterior_m2_norm_const(const HierCase& hc, double sigma);

// Hyper-posterior with discrete lambda, delta in {1, 2}, zero-mean Gaussian
// priors on d and m, forward d = k m. Index 0 is the value 1, index 1 is 2.
struct DiscreteHyperTable {
  double cell[2][2] = {{0, 0}, {0, 0}};  // [lambda][delta], without 1/p(d)
  double lambda[2] = {0, 0};
  double delta[2] = {0, 0};
  double lambda_norm[2] = {0, 0};
  double delta_norm[2] = {0, 0};
  double dlambda_norm_dk[2] = {0, 0};
  double ddelta_norm_dk[2] = {0, 0};
};

DiscreteHyperTable discrete_hyper_marginals(double pi_lambda, double pi_delta, double k);
// Same table with each cell integrated over m numerically (no sensitivities).
DiscreteHyperTable discrete_hyper_marginals_quadrature(double pi_lambda, double pi_delta, double k,
                                                       const QuadratureSpec& q = {});

// Unnormalized (lambda, delta) posterior of the fully Gaussian example with
// d_obs = m0 = 1 and unit hyper-prior widths.
double gaussian_hyper_posterior(double k, double lambda, double delta);
// Same quantity by quadrature over m (oracle route).
double gaussian_hyper_posterior_quadrature(double k, double lambda, double delta);

struct GridArgmax {
  double lambda = 0.0;
  double delta = 0.0;
  double value = 0.0;
};
GridArgmax gaussian_hyper_argmax(double k, double lo = 0.05, double hi = 3.0, double step = 0.005);

}  // namespace bkaudit
