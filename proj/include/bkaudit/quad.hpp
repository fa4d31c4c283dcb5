#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bkaudit/geometry.hpp"
#include "bkaudit/types.hpp"

namespace bkaudit {

enum class Engine { tensor_gauss, adaptive_subdivision, monte_carlo };

std::string engine_name(Engine e);
Engine engine_from_name(const std::string& s);

struct QuadratureSpec {
  Engine engine = Engine::adaptive_subdivision;
  double rel_tol = 1e-6;
  double abs_tol = 1e-10;
  std::int64_t max_evals = 20'000'000;
  std::optional<std::uint64_t> seed;

  void validate() const;
  bool operator==(const QuadratureSpec&) const = default;
};

struct IntegrationResult {
  double value = 0.0;
  double err_est = 0.0;
  std::int64_t evals = 0;
  bool budget_exceeded = false;
};

IntegrationResult integrate(const ScalarField& f, const Box& b, const QuadratureSpec& q);

// Convenience 1D wrapper over the same engines.
IntegrationResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                               const QuadratureSpec& q);

// Integral over a convex polygon: parallelograms through the affine map
// from the unit square, other polygons fan-triangulated with the Duffy map.
IntegrationResult integrate_polygon(const ScalarField& f, const Polygon& poly,
                                    const QuadratureSpec& q);

// Exact integral of a constant over a polygon.
double integrate_indicator_polytope(double c, const Polygon& verts);

// Serial adaptive Gauss-Kronrod (7/15) on [a,b]. Cheap building block for
// nested 1D integrals where per-call thread fan-out would not pay off.
IntegrationResult gk_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol, std::int64_t max_evals = 200000);

// Gauss-Legendre nodes/weights on [-1,1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
const GaussRule& gauss_legendre(int n);

namespace kernels {

inline constexpr int kTensorOrder = 10;

// Composite tensor-product Gauss-Legendre, `panels` per axis, `order` nodes
// per panel. Parallel over fixed node chunks, reduced pairwise.
double tensor_gauss(const ScalarField& f, const Box& b, int panels, int order);

inline constexpr std::int64_t kMcBlock = 1 << 14;

struct McMoments {
  double sum = 0.0;
  double sumsq = 0.0;
  std::int64_t n = 0;
};
// Uniform samples in b, drawn in fixed blocks with per-block seeds.
McMoments monte_carlo(const ScalarField& f, const Box& b, std::uint64_t seed,
                      std::int64_t first_block, std::int64_t n_blocks,
                      std::int64_t block_size = kMcBlock);

struct RegionEstimate {
  double value = 0.0;
  double err = 0.0;
  int split_axis = 0;
};
// Embedded cubature on one box: Gauss-Kronrod in 1D, Genz-Malik otherwise.
RegionEstimate region_rule(const ScalarField& f, const Box& b);
std::int64_t region_rule_evals(int dim);

}  // namespace kernels

namespace reference {

// Straight serial loops with naive running sums; kept to cross-check the
// parallel kernels and as the benchmark baseline.
double tensor_gauss_serial(const ScalarField& f, const Box& b, int panels, int order);
kernels::McMoments monte_carlo_serial(const ScalarField& f, const Box& b, std::uint64_t seed,
                                      std::int64_t first_block, std::int64_t n_blocks,
                                      std::int64_t block_size = kernels::kMcBlock);

}  // namespace reference

}  // namespace bkaudit
