/// @file kmeans.hpp
/// @brief Lloyd's k-means, shared by IVF coarse quantization and PQ codebooks.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adanns/embedding.hpp"

namespace adanns {

enum class KmeansInit { kPlusPlus, kRandomSubset };

struct KmeansConfig {
  std::size_t k = 1;
  std::size_t max_iters = 25;
  /// Stop when the relative objective improvement of one iteration drops
  /// below this value.
  double tol = 1e-4;
  std::uint64_t seed = 1234;
  KmeansInit init = KmeansInit::kPlusPlus;
  /// Fraction of the points used for training, drawn deterministically from
  /// the seed. 1.0 trains on every point.
  double sample_fraction = 1.0;
  /// Threads for the assignment step; 0 = hardware concurrency. The result
  /// does not depend on this value.
  std::size_t workers = 1;
};

/// k x dim centroid matrix plus training diagnostics.
struct Centroids {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> data;
  /// Sum over training points of the squared distance to the nearest final
  /// centroid.
  double objective = 0.0;
  /// Objective after each Lloyd iteration (assignment + update); non-increasing.
  std::vector<double> history;

  std::span<const float> centroid(std::size_t i) const noexcept {
    return {data.data() + i * dim, dim};
  }
  EmbeddingView view() const noexcept { return {data.data(), k, dim, dim}; }
};

/// Trains k centroids in the view's dimension.
/// Throws InsufficientDataError when there are fewer points than clusters.
Centroids train_kmeans(const EmbeddingView& points, const KmeansConfig& cfg);

/// Lloyd iterations starting from the given centroids (no re-initialization).
/// Used to warm-start codebooks inside OPQ.
Centroids refine_kmeans(const EmbeddingView& points, Centroids init,
                        const KmeansConfig& cfg);

/// Index of the nearest centroid for each point (ties to the lowest index).
/// Throws DimensionError unless points.dim() == centroids.dim.
std::vector<std::uint32_t> assign(const EmbeddingView& points,
                                  const Centroids& centroids,
                                  std::size_t workers = 1);

/// Nearest centroid of a single vector over the first `dim` coordinates.
std::uint32_t nearest_centroid(std::span<const float> x,
                               const Centroids& centroids, std::size_t dim,
                               float* distance = nullptr) noexcept;

}  // namespace adanns
