#pragma once

#include <cstddef>
#include <span>

namespace hessianlab {

/// Pairwise (tree) summation with a fixed split order. The result depends only on
/// the input sequence, never on thread count or scheduling.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kLeaf = 64;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace hessianlab
