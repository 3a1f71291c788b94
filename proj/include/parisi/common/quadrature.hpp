#pragma once

#include <vector>

namespace parisi::quad {

/// Nodes and weights for E f(Z), Z standard normal. Weights sum to 1.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Probabilists' Gauss-Hermite rule of the given order (Golub-Welsch).
/// Cached per order; safe to call concurrently.
const Rule& gauss_hermite(int order);

}  // namespace parisi::quad
