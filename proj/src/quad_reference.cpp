#include <cmath>
#include <vector>

#include "bkaudit/errors.hpp"
#include "bkaudit/quad.hpp"
#include "rng.hpp"

namespace bkaudit::reference {

namespace {

void nest(const ScalarField& f, const Box& b, const GaussRule& rule, int panels, int axis,
          double w, Point& x, double& acc) {
  const int d = b.dim();
  if (axis == d) {
    acc += w * f(x);
    return;
  }
  const double hw = (b.hi[axis] - b.lo[axis]) / panels;
  const int order = static_cast<int>(rule.x.size());
  for (int p = 0; p < panels; ++p) {
    for (int j = 0; j < order; ++j) {
      x[axis] = b.lo[axis] + hw * (p + 0.5 * (1.0 + rule.x[j]));
      nest(f, b, rule, panels, axis + 1, w * 0.5 * hw * rule.w[j], x, acc);
    }
  }
}

}  // namespace

double tensor_gauss_serial(const ScalarField& f, const Box& b, int panels, int order) {
  Point x(b.dim());
  double acc = 0.0;
  nest(f, b, gauss_legendre(order), panels, 0, 1.0, x, acc);
  if (std::isnan(acc)) fail(ErrorKind::NaNEncountered, "integrand returned NaN");
  return acc;
}

kernels::McMoments monte_carlo_serial(const ScalarField& f, const Box& b, std::uint64_t seed,
                                      std::int64_t first_block, std::int64_t n_blocks,
                                      std::int64_t block_size) {
  const int d = b.dim();
  Point x(d);
  const Point width = b.hi - b.lo;
  kernels::McMoments m;
  for (std::int64_t blk = 0; blk < n_blocks; ++blk) {
    detail::Xoshiro256 rng(detail::block_seed(seed, first_block + blk));
    for (std::int64_t k = 0; k < block_size; ++k) {
      for (int i = 0; i < d; ++i) x[i] = b.lo[i] + width[i] * rng.uniform();
      const double fx = f(x);
      m.sum += fx;
      m.sumsq += fx * fx;
    }
  }
  m.n = n_blocks * block_size;
  if (std::isnan(m.sum)) fail(ErrorKind::NaNEncountered, "integrand returned NaN");
  return m;
}

}  // namespace bkaudit::reference
