#pragma once

#include <cstdint>
#include <span>

namespace bkaudit::parallel {

// Reads AUDIT_THREADS (if set) and caps the OpenMP worker count.
// Returns the resulting maximum thread count.
int configure_from_env();
void set_max_threads(int n);
int max_threads();

// Fixed-order pairwise summation; the result depends only on the input
// order, never on how many workers produced the terms.
double pairwise_sum(std::span<const double> xs);

// SplitMix64 step, used to derive independent per-block RNG seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bkaudit::parallel
