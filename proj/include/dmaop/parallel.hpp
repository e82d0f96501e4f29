#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace dmaop {

/// Number of worker threads used by parallel_for (>= 1).
int thread_count();
void set_thread_count(int n);

/// Runs body(begin, end) over fixed-size blocks of [0, n). The block layout
/// depends only on n, so any per-index result is independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Pairwise (cascade) summation; the tree shape depends only on the length.
double pairwise_sum(std::span<const double> values);

}  // namespace dmaop
