#include "bkaudit/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace bkaudit::parallel {

int configure_from_env() {
  if (const char* s = std::getenv("AUDIT_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(s, &end, 10);
    if (end != s && n > 0) set_max_threads(static_cast<int>(n));
  }
  return max_threads();
}

void set_max_threads(int n) { omp_set_num_threads(n < 1 ? 1 : n); }

int max_threads() { return omp_get_max_threads(); }

double pairwise_sum(std::span<const double> xs) {
  const size_t n = xs.size();
  if (n <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const size_t h = n / 2;
  return pairwise_sum(xs.subspan(0, h)) + pairwise_sum(xs.subspan(h));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace bkaudit::parallel
