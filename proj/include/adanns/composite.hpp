/// @file composite.hpp
/// @brief IVF shortlisting with PQ/OPQ-compressed list scans and an optional
/// full-precision re-ranking stage.

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "adanns/ivf.hpp"
#include "adanns/quantization.hpp"

namespace adanns {

struct CodecSpec {
  /// Prefix dimension that is quantized.
  std::size_t d_q = 0;
  /// Code bytes (sub-space count).
  std::size_t m = 8;
  bool opq = true;
  std::size_t opq_iters = 20;
};

struct CompositeResult {
  std::vector<Neighbor> neighbors;
  /// Set iff the probed lists held fewer than topk points.
  bool underfill = false;
};

class CompositeIndex {
 public:
  /// IVF on the d_c-prefix, codec on the d_q-prefix, every point encoded.
  /// rerank_dim = 0 disables re-ranking.
  static CompositeIndex build(std::shared_ptr<const EmbeddingSet> source,
                              std::size_t d_c, std::size_t k,
                              const CodecSpec& codec_spec,
                              std::size_t rerank_dim, const KmeansConfig& kcfg);

  /// Probes p.n_probe lists via the d_c-prefix, ranks their members by ADC,
  /// keeps the best `shortlist`, and when re-ranking is enabled re-sorts them
  /// by exact distance on the rerank_dim-prefix. p.d_s is ignored; the scan
  /// dimension is the codec's d_q. shortlist = 0 means 10 * topk.
  CompositeResult search(std::span<const float> query, const SearchParams& p,
                         std::size_t shortlist = 0) const;

  const IvfIndex& ivf() const noexcept { return ivf_; }
  const PqCodec& codec() const noexcept { return codec_; }
  const PqCodes& codes() const noexcept { return codes_; }
  std::size_t rerank_dim() const noexcept { return rerank_dim_; }

  /// Layout: "ADNSCMP1", u32 version, u32 rerank_dim, then the IVF block, the
  /// codec block and the code block.
  void write(ByteWriter& out) const;
  static CompositeIndex read(ByteReader& in,
                             std::shared_ptr<const EmbeddingSet> source);
  void save(const std::filesystem::path& path) const;
  static CompositeIndex load(const std::filesystem::path& path,
                             std::shared_ptr<const EmbeddingSet> source);

 private:
  IvfIndex ivf_;
  PqCodec codec_;
  PqCodes codes_;
  std::size_t rerank_dim_ = 0;
};

inline constexpr std::size_t kDefaultShortlistFactor = 10;

}  // namespace adanns
