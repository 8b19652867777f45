/// @file distance.hpp
/// @brief Squared-L2 kernel, ranked neighbor lists and exact (flat) search.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adanns/embedding.hpp"

namespace adanns {

/// Squared Euclidean distance over the first `dim` entries of a and b.
/// Eight independent accumulators so the loop vectorizes; the summation order
/// is fixed, which keeps results reproducible across runs.
inline float l2_sq(const float* a, const float* b, std::size_t dim) noexcept {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t j = 0;
  for (; j + 8 <= dim; j += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      const float t = a[j + l] - b[j + l];
      acc[l] += t * t;
    }
  }
  float tail = 0.0f;
  for (; j < dim; ++j) {
    const float t = a[j] - b[j];
    tail += t * t;
  }
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) +
         ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

inline float l2_sq(std::span<const float> a, std::span<const float> b) noexcept {
  return l2_sq(a.data(), b.data(), a.size());
}

struct Neighbor {
  std::uint32_t id = 0;
  float distance = 0.0f;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ascending distance, ties to the lower id. Used by every search path.
inline bool closer(const Neighbor& a, const Neighbor& b) noexcept {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

/// Keeps the `topk` best of `candidates` in ranked order.
void keep_topk(std::vector<Neighbor>& candidates, std::size_t topk);

/// Exhaustive search of `query[:base.dim()]` against every row of `base`.
std::vector<Neighbor> flat_search(const EmbeddingView& base,
                                  std::span<const float> query,
                                  std::size_t topk);

}  // namespace adanns
