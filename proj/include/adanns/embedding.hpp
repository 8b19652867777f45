/// @file embedding.hpp
/// @brief Dense embedding storage with zero-copy matryoshka prefix views.
///
/// A matryoshka embedding packs the most useful information into its leading
/// coordinates, so the first m entries of each row form a usable
/// m-dimensional embedding. EmbeddingView is the access primitive for that:
/// it aliases the rows of an EmbeddingSet and exposes only the first `dim`
/// columns.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace adanns {

/// Non-owning n x dim window over row-major storage with row stride >= dim.
class EmbeddingView {
 public:
  EmbeddingView() = default;
  EmbeddingView(const float* data, std::size_t n, std::size_t dim,
                std::size_t stride)
      : data_(data), n_(n), dim_(dim), stride_(stride) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t stride() const noexcept { return stride_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {data_ + i * stride_, dim_};
  }
  float at(std::size_t i, std::size_t j) const noexcept {
    return data_[i * stride_ + j];
  }

  /// Narrows the view further; throws DimensionError unless 1 <= m <= dim().
  EmbeddingView prefix(std::size_t m) const;

 private:
  const float* data_ = nullptr;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::size_t stride_ = 0;
};

/// Owning n x d float matrix with optional class labels and external ids.
/// Immutable after construction.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(std::size_t n, std::size_t d, std::vector<float> data,
               std::vector<std::int32_t> labels = {},
               std::vector<std::int64_t> ids = {});

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * d_, d_};
  }

  bool has_labels() const noexcept { return !labels_.empty(); }
  const std::vector<std::int32_t>& labels() const noexcept { return labels_; }

  /// External identifier of row i; positional when none were supplied.
  std::int64_t id(std::size_t i) const noexcept {
    return ids_.empty() ? static_cast<std::int64_t>(i) : ids_[i];
  }

  EmbeddingView view() const noexcept { return {data_.data(), n_, d_, d_}; }
  EmbeddingView prefix(std::size_t m) const;

  /// Copies the first m columns into a standalone set (a "rigid" m-dim
  /// representation). Labels and ids are carried over.
  EmbeddingSet truncated(std::size_t m) const;

  /// Returns a copy with every row scaled to unit L2 norm, so that squared
  /// L2 ranking equals cosine ranking. Zero rows are left untouched.
  EmbeddingSet normalized() const;

  EmbeddingSet with_labels(std::vector<std::int32_t> labels) const;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<float> data_;
  std::vector<std::int32_t> labels_;
  std::vector<std::int64_t> ids_;
};

/// Parameters of the synthetic nested-embedding generator.
///
/// Coordinate j of the class means has standard deviation proportional to
/// (j + 1)^(-variance_decay); the per-point noise decays at
/// (j + 1)^(-noise_decay), which defaults to the same rate.
struct SyntheticMrSpec {
  std::size_t n = 10000;
  std::size_t num_queries = 1000;
  std::size_t d = 128;
  std::size_t num_classes = 10;
  double variance_decay = 0.5;
  /// Expected L2 distance between two class means. The noise is scaled so
  /// that each vector's expected squared noise norm is 1.
  double class_sep = 2.0;
  /// Unset: equal to variance_decay.
  std::optional<double> noise_decay;
  std::uint64_t seed = 42;
};

struct SyntheticData {
  EmbeddingSet database;
  EmbeddingSet queries;
};

/// Per-coordinate standard deviations (unit total variance) for a decay rate.
std::vector<double> coordinate_scales(std::size_t d, double decay);

/// Generates labelled database and query sets. Deterministic given the seed.
SyntheticData generate_synthetic_mr(const SyntheticMrSpec& spec);

/// fvecs: per record a little-endian int32 dimension followed by that many
/// little-endian float32 values. ivecs uses int32 values instead.
EmbeddingSet read_fvecs(const std::filesystem::path& path);
void write_fvecs(const EmbeddingView& view, const std::filesystem::path& path);
void write_fvecs(const EmbeddingSet& set, const std::filesystem::path& path);

std::vector<std::vector<std::int32_t>> read_ivecs(
    const std::filesystem::path& path);
void write_ivecs(const std::vector<std::vector<std::int32_t>>& rows,
                 const std::filesystem::path& path);

/// Labels are stored as an ivecs file with one single-entry record per row.
std::vector<std::int32_t> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<std::int32_t>& labels,
                  const std::filesystem::path& path);

}  // namespace adanns
