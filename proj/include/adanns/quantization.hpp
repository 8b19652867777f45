/// @file quantization.hpp
/// @brief Product quantization (PQ), optimized PQ (OPQ) and asymmetric
/// distance computation over an arbitrary embedding prefix.
///
/// A codec covers the first d_q coordinates of a vector. It splits them into
/// m contiguous sub-vectors of d_q / m coordinates and stores, for each, the
/// index of the nearest of 256 codewords, so a code is exactly m bytes. An OPQ
/// codec first applies an orthonormal rotation R to the d_q-prefix.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adanns/binary_io.hpp"
#include "adanns/distance.hpp"
#include "adanns/embedding.hpp"
#include "adanns/kmeans.hpp"

namespace adanns {

inline constexpr std::size_t kPqBits = 8;
inline constexpr std::size_t kPqCodewords = std::size_t{1} << kPqBits;

/// n x m code matrix, row-major, one byte per sub-space.
struct PqCodes {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::uint8_t> bytes;

  std::span<const std::uint8_t> code(std::size_t i) const noexcept {
    return {bytes.data() + i * m, m};
  }

  void write(ByteWriter& out) const;
  static PqCodes read(ByteReader& in);

  friend bool operator==(const PqCodes&, const PqCodes&) = default;
};

/// Per-query lookup tables: m x 256 squared sub-distances.
struct AdcTable {
  std::size_t m = 0;
  std::vector<float> entries;

  float operator()(std::span<const std::uint8_t> code) const noexcept {
    float dist = 0.0f;
    const float* t = entries.data();
    for (std::size_t j = 0; j < m; ++j, t += kPqCodewords) dist += t[code[j]];
    return dist;
  }
};

class PqCodec {
 public:
  PqCodec() = default;
  PqCodec(std::size_t d_q, std::size_t m, std::vector<float> codebooks,
          std::optional<std::vector<float>> rotation = std::nullopt);

  std::size_t d_q() const noexcept { return d_q_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t bits() const noexcept { return kPqBits; }
  std::size_t sub_dim() const noexcept { return d_q_ / m_; }
  std::size_t code_bytes() const noexcept { return m_; }
  bool has_rotation() const noexcept { return rotation_.has_value(); }

  /// Codeword c of sub-space j (sub_dim() floats).
  std::span<const float> codeword(std::size_t j, std::size_t c) const noexcept {
    return {codebooks_.data() + (j * kPqCodewords + c) * sub_dim(), sub_dim()};
  }
  std::span<const float> codebooks() const noexcept { return codebooks_; }
  /// Row-major d_q x d_q matrix R; the quantized space is R * x.
  const std::optional<std::vector<float>>& rotation() const noexcept {
    return rotation_;
  }

  /// R * x[:d_q] (identity copy for plain PQ).
  std::vector<float> rotate(std::span<const float> x) const;

  /// points.dim() must equal d_q().
  PqCodes encode(const EmbeddingView& points) const;
  void encode_one(std::span<const float> x, std::span<std::uint8_t> out) const;

  /// n x d_q reconstructions in the original (unrotated) space.
  std::vector<float> decode(const PqCodes& codes) const;
  std::vector<float> decode_one(std::span<const std::uint8_t> code) const;

  /// Squared reconstruction error of each point.
  std::vector<double> reconstruction_errors(const EmbeddingView& points) const;
  /// Mean of reconstruction_errors().
  double mse(const EmbeddingView& points) const;

  /// Requires query.size() >= d_q().
  AdcTable adc_table(std::span<const float> query) const;
  std::vector<float> adc_distance(std::span<const float> query,
                                  const PqCodes& codes) const;

  /// Layout: "ADNSPQC1", u32 version, u32 d_q, u32 m, u32 b, u8 rotation
  /// flag, [f32 d_q*d_q rotation], f32 m*256*(d_q/m) codebooks.
  void write(ByteWriter& out) const;
  static PqCodec read(ByteReader& in);
  void save(const std::filesystem::path& path) const;
  static PqCodec load(const std::filesystem::path& path);

 private:
  std::size_t d_q_ = 0;
  std::size_t m_ = 0;
  std::vector<float> codebooks_;
  std::optional<std::vector<float>> rotation_;
};

/// Plain PQ: codebook j is k-means (k = 256) over the j-th sub-vector slice.
/// With fewer than 256 points the surplus codewords duplicate codeword 0.
PqCodec train_pq(const EmbeddingView& points, std::size_t m,
                 const KmeansConfig& kcfg);

/// Non-parametric OPQ. Starts from R = I and alternates
///   (b) R <- orthogonal Procrustes fit of the data onto the current
///       reconstructions, and
///   (a) codebooks <- warm-started Lloyd iterations on the rotated data,
/// `iters` times. The objective sum ||R x - decode(encode(R x))||^2 after the
/// initial PQ and after every alternation is appended to `objective_history`.
PqCodec train_opq(const EmbeddingView& points, std::size_t m,
                  std::size_t iters, const KmeansConfig& kcfg,
                  std::vector<double>* objective_history = nullptr,
                  std::size_t refine_iters = 4);

/// Exhaustive ADC scan of every code, ranked (ties to the lower id).
std::vector<Neighbor> adc_search(const PqCodec& codec, const PqCodes& codes,
                                 std::span<const float> query,
                                 std::size_t topk);

struct PqBudget {
  /// Code size in bytes, i.e. the sub-space count m.
  std::size_t bytes = 16;
  /// Prefix dimensions to try.
  std::vector<std::size_t> candidate_dims;
};

struct BudgetEntry {
  std::size_t dim = 0;
  double top1 = 0.0;
  bool skipped = false;
  std::string note;
};

struct AdannsOpqResult {
  PqCodec codec;
  std::size_t best_dim = 0;
  double best_top1 = 0.0;
  /// One entry per candidate, in candidate order.
  std::vector<BudgetEntry> table;
};

struct OpqTrainConfig {
  std::size_t iters = 20;
  KmeansConfig kmeans;
};

/// For each candidate prefix dimension, trains OPQ with m = budget.bytes on
/// the prefix of `database`, scores top-1 label accuracy of an exhaustive ADC
/// scan for the labelled `queries`, and returns the best codec (ties go to
/// the smaller dimension). Candidates not divisible by m or wider than the
/// data are skipped and reported.
AdannsOpqResult train_adanns_opq(const EmbeddingSet& database,
                                 const PqBudget& budget,
                                 const EmbeddingSet& queries,
                                 const OpqTrainConfig& cfg = {});

}  // namespace adanns
