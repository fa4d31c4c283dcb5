// Parallel integration kernels. Every reduction happens in a fixed order
// over fixed-size chunks, so results do not depend on the thread count.
#include <omp.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "bkaudit/errors.hpp"
#include "bkaudit/parallel.hpp"
#include "bkaudit/quad.hpp"
#include "rng.hpp"

namespace bkaudit::kernels {

namespace {

constexpr std::int64_t kChunk = 4096;

}  // namespace

double tensor_gauss(const ScalarField& f, const Box& b, int panels, int order) {
  const GaussRule& rule = gauss_legendre(order);
  const int d = b.dim();
  const std::int64_t n1 = static_cast<std::int64_t>(panels) * order;
  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) total *= n1;
  const Point hw = (b.hi - b.lo) / static_cast<double>(panels);
  const std::int64_t n_chunks = (total + kChunk - 1) / kChunk;
  std::vector<double> chunk_sums(static_cast<size_t>(n_chunks), 0.0);
  std::atomic<bool> bad{false};

#pragma omp parallel
  {
    Point x(d);
    std::vector<double> terms(kChunk);
    std::vector<std::int64_t> idx(d);
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < n_chunks; ++c) {
      const std::int64_t start = c * kChunk;
      const std::int64_t stop = std::min(total, start + kChunk);
      for (std::int64_t k = start; k < stop; ++k) {
        std::int64_t r = k;
        double w = 1.0;
        for (int i = d - 1; i >= 0; --i) {
          const std::int64_t j = r % n1;
          r /= n1;
          const std::int64_t panel = j / order;
          const int node = static_cast<int>(j % order);
          x[i] = b.lo[i] + hw[i] * (static_cast<double>(panel) + 0.5 * (1.0 + rule.x[node]));
          w *= 0.5 * hw[i] * rule.w[node];
        }
        const double fx = f(x);
        if (std::isnan(fx)) bad = true;
        terms[static_cast<size_t>(k - start)] = w * fx;
      }
      chunk_sums[static_cast<size_t>(c)] =
          parallel::pairwise_sum(std::span<const double>(terms.data(), static_cast<size_t>(stop - start)));
    }
  }
  if (bad) fail(ErrorKind::NaNEncountered, "integrand returned NaN");
  return parallel::pairwise_sum(chunk_sums);
}

McMoments monte_carlo(const ScalarField& f, const Box& b, std::uint64_t seed,
                      std::int64_t first_block, std::int64_t n_blocks, std::int64_t block_size) {
  const int d = b.dim();
  const Point width = b.hi - b.lo;
  std::vector<double> sums(static_cast<size_t>(n_blocks)), sumsqs(static_cast<size_t>(n_blocks));
  std::atomic<bool> bad{false};

#pragma omp parallel
  {
    Point x(d);
#pragma omp for schedule(static)
    for (std::int64_t blk = 0; blk < n_blocks; ++blk) {
      detail::Xoshiro256 rng(detail::block_seed(seed, first_block + blk));
      double s = 0.0, s2 = 0.0;
      for (std::int64_t k = 0; k < block_size; ++k) {
        for (int i = 0; i < d; ++i) x[i] = b.lo[i] + width[i] * rng.uniform();
        const double fx = f(x);
        if (std::isnan(fx)) bad = true;
        s += fx;
        s2 += fx * fx;
      }
      sums[static_cast<size_t>(blk)] = s;
      sumsqs[static_cast<size_t>(blk)] = s2;
    }
  }
  if (bad) fail(ErrorKind::NaNEncountered, "integrand returned NaN");
  McMoments m;
  m.sum = parallel::pairwise_sum(sums);
  m.sumsq = parallel::pairwise_sum(sumsqs);
  m.n = n_blocks * block_size;
  return m;
}

namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1,1].
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

RegionEstimate gk15(const ScalarField& f, const Box& b) {
  Point x(1);
  const double c = 0.5 * (b.lo[0] + b.hi[0]);
  const double h = 0.5 * (b.hi[0] - b.lo[0]);
  x[0] = c;
  const double fc = f(x);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    x[0] = c - h * kXgk[j];
    const double f1 = f(x);
    x[0] = c + h * kXgk[j];
    const double f2 = f(x);
    rk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  RegionEstimate r;
  r.value = rk * h;
  r.err = std::abs((rk - rg) * h);
  r.split_axis = 0;
  return r;
}

RegionEstimate genz_malik(const ScalarField& f, const Box& b) {
  const int d = b.dim();
  const double dd = d;
  const double l2 = std::sqrt(9.0 / 70.0), l4 = std::sqrt(9.0 / 10.0), l5 = std::sqrt(9.0 / 19.0);
  const double w1 = (12824.0 - 9120.0 * dd + 400.0 * dd * dd) / 19683.0;
  const double w2 = 980.0 / 6561.0;
  const double w3 = (1820.0 - 400.0 * dd) / 19683.0;
  const double w4 = 200.0 / 19683.0;
  const double w5 = 6859.0 / 19683.0 / std::ldexp(1.0, d);
  const double e1 = (729.0 - 950.0 * dd + 50.0 * dd * dd) / 729.0;
  const double e2 = 245.0 / 486.0;
  const double e3 = (265.0 - 100.0 * dd) / 1458.0;
  const double e4 = 25.0 / 729.0;
  const double ratio = (l2 * l2) / (l4 * l4);

  const Point c = b.center();
  const Point h = 0.5 * (b.hi - b.lo);
  Point x = c;
  const double f1 = f(x);
  double s2 = 0.0, s3 = 0.0, s4 = 0.0, s5 = 0.0;
  double maxdiff = -1.0;
  int axis = 0;
  for (int i = 0; i < d; ++i) {
    x[i] = c[i] - l2 * h[i];
    const double a2 = f(x);
    x[i] = c[i] + l2 * h[i];
    const double b2 = f(x);
    x[i] = c[i] - l4 * h[i];
    const double a3 = f(x);
    x[i] = c[i] + l4 * h[i];
    const double b3 = f(x);
    x[i] = c[i];
    s2 += a2 + b2;
    s3 += a3 + b3;
    const double diff = std::abs(a2 + b2 - 2.0 * f1 - ratio * (a3 + b3 - 2.0 * f1));
    if (diff > maxdiff * (1.0 + 1e-12) + 1e-300) {
      maxdiff = diff;
      axis = i;
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      for (int si = -1; si <= 1; si += 2) {
        for (int sj = -1; sj <= 1; sj += 2) {
          x[i] = c[i] + si * l4 * h[i];
          x[j] = c[j] + sj * l4 * h[j];
          s4 += f(x);
        }
      }
      x[i] = c[i];
      x[j] = c[j];
    }
  }
  const int corners = 1 << d;
  for (int m = 0; m < corners; ++m) {
    for (int i = 0; i < d; ++i) x[i] = c[i] + ((m >> i) & 1 ? l5 : -l5) * h[i];
    s5 += f(x);
  }
  const double vol = b.volume();
  RegionEstimate r;
  r.value = vol * (w1 * f1 + w2 * s2 + w3 * s3 + w4 * s4 + w5 * s5);
  const double r5 = vol * (e1 * f1 + e2 * s2 + e3 * s3 + e4 * s4);
  r.err = std::abs(r.value - r5);
  if (maxdiff <= 0.0) {
    // no curvature signal (e.g. a flat patch next to a jump): split widest axis
    Eigen::Index wi;
    (b.hi - b.lo).maxCoeff(&wi);
    axis = static_cast<int>(wi);
  }
  r.split_axis = axis;
  return r;
}

}  // namespace

RegionEstimate region_rule(const ScalarField& f, const Box& b) {
  RegionEstimate r = b.dim() == 1 ? gk15(f, b) : genz_malik(f, b);
  if (std::isnan(r.value)) fail(ErrorKind::NaNEncountered, "integrand returned NaN");
  return r;
}

std::int64_t region_rule_evals(int dim) {
  if (dim == 1) return 15;
  return (std::int64_t{1} << dim) + 2 * dim * dim + 2 * dim + 1;
}

}  // namespace bkaudit::kernels
