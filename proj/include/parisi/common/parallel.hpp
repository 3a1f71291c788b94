#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace parisi::par {

/// Caps worker threads; 0 restores the default (PARISI_LAB_THREADS, else
/// the hardware concurrency).
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks; the
/// first exception thrown by any block is rethrown after all joins.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise (tree) summation in index order. The result depends only on the
/// values, not on how they were produced.
double pairwise_sum(std::span<const double> x);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Sample mean and standard error (sample sd / sqrt(n)), fixed-order sums.
MeanStderr mean_stderr(std::span<const double> x);

}  // namespace parisi::par
