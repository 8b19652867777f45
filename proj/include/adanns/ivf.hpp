/// @file ivf.hpp
/// @brief Inverted-file index with decoupled cluster and scan dimensions.
///
/// Clusters are trained on the d_c-prefix of the database. At query time the
/// n_p nearest centroids are probed using the d_c-prefix of the query, and the
/// members of those lists are ranked by squared L2 distance over the d_s-prefix.
/// With d_c == d_s this is an ordinary IVF; search_adaptive_d covers the case
/// of a full-dimension index queried with a shorter prefix everywhere.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "adanns/binary_io.hpp"
#include "adanns/distance.hpp"
#include "adanns/embedding.hpp"
#include "adanns/kmeans.hpp"

namespace adanns {

struct SearchParams {
  std::size_t d_s = 0;
  std::size_t n_probe = 1;
  std::size_t topk = 1;
  /// Prefix used to rank centroids. 0 means d_c. Values in [1, d_c) enable
  /// shortlisting on an even shorter prefix of the stored centroids.
  std::size_t d_shortlist = 0;
};

class IvfIndex {
 public:
  /// Trains k centroids on the d_c-prefix of `source` and files every row
  /// under its nearest centroid. `kcfg.k` is overridden by `k`.
  static IvfIndex build(std::shared_ptr<const EmbeddingSet> source,
                        std::size_t d_c, std::size_t k, KmeansConfig kcfg);

  std::vector<Neighbor> search(std::span<const float> query,
                               const SearchParams& p) const;

  /// Inference-time adaptivity on an index built at d_c = full dimension:
  /// both centroid ranking and the list scan use the d_hat-prefix.
  std::vector<Neighbor> search_adaptive_d(std::span<const float> query,
                                          std::size_t d_hat,
                                          std::size_t n_probe,
                                          std::size_t topk) const;

  /// Ids of the n_probe lists whose centroids are nearest to the
  /// shortlist_dim-prefix of the query (ties to the lower list id).
  std::vector<std::uint32_t> probe(std::span<const float> query,
                                   std::size_t shortlist_dim,
                                   std::size_t n_probe) const;

  std::size_t k() const noexcept { return centroids_.k; }
  std::size_t d_c() const noexcept { return d_c_; }
  const Centroids& centroids() const noexcept { return centroids_; }
  const std::vector<std::vector<std::uint32_t>>& lists() const noexcept {
    return lists_;
  }
  const EmbeddingSet& source() const noexcept { return *source_; }
  const std::shared_ptr<const EmbeddingSet>& source_handle() const noexcept {
    return source_;
  }

  /// Layout: "ADNSIVF1", u32 version, u64 n, u32 source dim, u32 k, u32 d_c,
  /// f32[k*d_c] centroids, then k x (u32 length, u32 ids[length]).
  void write(ByteWriter& out) const;
  static IvfIndex read(ByteReader& in,
                       std::shared_ptr<const EmbeddingSet> source);
  void save(const std::filesystem::path& path) const;
  static IvfIndex load(const std::filesystem::path& path,
                       std::shared_ptr<const EmbeddingSet> source);

 private:
  std::shared_ptr<const EmbeddingSet> source_;
  std::size_t d_c_ = 0;
  Centroids centroids_;
  std::vector<std::vector<std::uint32_t>> lists_;
};

/// Conventional IVF over a materialized (copied) d-dimensional
/// representation; clustering, probing and scanning all use every stored
/// coordinate. Kept as an independent code path for equivalence checks.
class RigidIvf {
 public:
  static RigidIvf build(const EmbeddingSet& set, std::size_t d, std::size_t k,
                        KmeansConfig kcfg);

  std::vector<Neighbor> search(std::span<const float> query,
                               std::size_t n_probe, std::size_t topk) const;

  std::size_t dim() const noexcept { return data_.dim(); }
  const std::vector<std::vector<std::uint32_t>>& lists() const noexcept {
    return lists_;
  }

 private:
  EmbeddingSet data_;
  Centroids centroids_;
  std::vector<std::vector<std::uint32_t>> lists_;
};

}  // namespace adanns
