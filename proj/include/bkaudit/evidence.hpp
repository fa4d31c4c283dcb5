#pragma once

#include <optional>
#include <string>

#include "bkaudit/condition.hpp"
#include "bkaudit/density.hpp"
#include "bkaudit/geometry.hpp"
#include "bkaudit/quad.hpp"

namespace bkaudit {

struct EvidenceResult {
  double value = 0.0;
  double err_est = 0.0;
  QuadratureSpec engine;
  std::string hyper_label;
  std::string method;  // "polytope", "interval" or "quadrature"
  bool budget_exceeded = false;
};

struct BayesFactorReport {
  EvidenceResult numerator;
  EvidenceResult denominator;
  double factor = 0.0;
  std::string favored;  // a hyper label or "tie"
};

// Where the integrand can be nonzero. Narrowing it keeps quadrature away
// from large empty regions; it never changes the mathematical value.
struct EvidenceRegion {
  std::optional<Polygon> polygon;  // 2D model spaces
  std::optional<Box> box;
};

// Integral of prior_d(g(m)) prior_m(m) dm. Uniform priors with a linear
// forward model in one or two model dimensions take the exact geometric path.
EvidenceResult evidence(const Density& prior_d, const Density& prior_m, const ForwardModel& fm,
                        const QuadratureSpec& q, const std::string& hyper_label = "",
                        const EvidenceRegion& region = {});

// Integral of likelihood(m) prior_m(m) dm by quadrature. Points where the
// likelihood throws DomainError contribute zero.
EvidenceResult evidence_of_likelihood(const ScalarField& likelihood, const Density& prior_m,
                                      const QuadratureSpec& q, const std::string& hyper_label = "",
                                      const EvidenceRegion& region = {});

BayesFactorReport bayes_factor(const EvidenceResult& num, const EvidenceResult& den);

struct InvarianceVerdict {
  EvidenceResult original;
  EvidenceResult transformed;
  double delta = 0.0;
  double tol = 0.0;  // 3 x combined err_est (plus a 1e-12 relative floor)
  bool pass = false;
};

// Evidence with prior_m pushed through t and g replaced by g o t^-1.
InvarianceVerdict audit_model_reparam_invariance(const Density& prior_d, const Density& prior_m,
                                                 const ForwardModel& fm, const Diffeo& t,
                                                 const QuadratureSpec& q, const EvidenceRegion& region = {});

// Evidence with prior_d pushed through t and g replaced by t o g.
// Values of t outside its domain count as zero likelihood.
InvarianceVerdict audit_data_reparam_invariance(const Density& prior_d, const Density& prior_m,
                                                const ForwardModel& fm, const Diffeo& t,
                                                const QuadratureSpec& q, const EvidenceRegion& region = {});

double aic(int k, double max_likelihood);

}  // namespace bkaudit
