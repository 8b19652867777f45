#include "adanns/embedding.hpp"

#include <cmath>
#include <string>

#include "adanns/binary_io.hpp"
#include "adanns/error.hpp"
#include "adanns/random.hpp"

namespace adanns {

EmbeddingView EmbeddingView::prefix(std::size_t m) const {
  if (m < 1 || m > dim_) {
    throw DimensionError("prefix width " + std::to_string(m) +
                         " outside [1, " + std::to_string(dim_) + "]");
  }
  return {data_, n_, m, stride_};
}

EmbeddingSet::EmbeddingSet(std::size_t n, std::size_t d,
                           std::vector<float> data,
                           std::vector<std::int32_t> labels,
                           std::vector<std::int64_t> ids)
    : n_(n), d_(d), data_(std::move(data)), labels_(std::move(labels)),
      ids_(std::move(ids)) {
  if (d_ == 0) throw DimensionError("embedding dimension must be positive");
  if (data_.size() != n_ * d_) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " != n*d = " + std::to_string(n_ * d_));
  }
  if (!labels_.empty() && labels_.size() != n_) {
    throw ConfigError("label count " + std::to_string(labels_.size()) +
                      " != n = " + std::to_string(n_));
  }
  if (!ids_.empty() && ids_.size() != n_) {
    throw ConfigError("id count " + std::to_string(ids_.size()) +
                      " != n = " + std::to_string(n_));
  }
}

EmbeddingView EmbeddingSet::prefix(std::size_t m) const {
  return view().prefix(m);
}

EmbeddingSet EmbeddingSet::truncated(std::size_t m) const {
  const EmbeddingView v = prefix(m);
  std::vector<float> out;
  out.reserve(n_ * m);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto r = v.row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return {n_, m, std::move(out), labels_, ids_};
}

EmbeddingSet EmbeddingSet::normalized() const {
  std::vector<float> out(data_);
  for (std::size_t i = 0; i < n_; ++i) {
    float* r = out.data() + i * d_;
    double norm = 0.0;
    for (std::size_t j = 0; j < d_; ++j) norm += double(r[j]) * r[j];
    if (norm <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm);
    for (std::size_t j = 0; j < d_; ++j) r[j] = static_cast<float>(r[j] * inv);
  }
  return {n_, d_, std::move(out), labels_, ids_};
}

EmbeddingSet EmbeddingSet::with_labels(std::vector<std::int32_t> labels) const {
  return {n_, d_, data_, std::move(labels), ids_};
}

std::vector<double> coordinate_scales(std::size_t d, double decay) {
  std::vector<double> s(d);
  double total = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    s[j] = std::pow(static_cast<double>(j + 1), -decay);
    total += s[j] * s[j];
  }
  const double norm = 1.0 / std::sqrt(total);
  for (double& v : s) v *= norm;
  return s;
}

namespace {

EmbeddingSet sample_points(std::size_t count, std::size_t d,
                           std::size_t num_classes,
                           const std::vector<double>& means,
                           const std::vector<double>& scales, Rng& rng) {
  std::vector<float> data(count * d);
  std::vector<std::int32_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t c = i % num_classes;
    labels[i] = static_cast<std::int32_t>(c);
    const double* mu = means.data() + c * d;
    float* row = data.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = static_cast<float>(mu[j] + scales[j] * rng.normal());
    }
  }
  return {count, d, std::move(data), std::move(labels)};
}

}  // namespace

SyntheticData generate_synthetic_mr(const SyntheticMrSpec& spec) {
  if (spec.n == 0 || spec.d == 0 || spec.num_classes == 0) {
    throw ConfigError("synthetic spec requires positive n, d and num_classes");
  }
  if (spec.num_classes > spec.n) {
    throw ConfigError("num_classes exceeds n");
  }
  const double noise_decay = spec.noise_decay.value_or(spec.variance_decay);
  if (spec.variance_decay < 0.0 || spec.class_sep < 0.0 || noise_decay < 0.0) {
    throw ConfigError("decay rates and class_sep must be non-negative");
  }

  const std::size_t d = spec.d;
  const std::vector<double> scales = coordinate_scales(d, spec.variance_decay);
  const std::vector<double> noise = coordinate_scales(d, noise_decay);

  // Two means drawn this way differ by class_sep in expectation (squared).
  Rng mean_rng(mix_seed(spec.seed, 1));
  std::vector<double> means(spec.num_classes * d);
  const double mean_scale = spec.class_sep / std::sqrt(2.0);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      means[c * d + j] = mean_scale * scales[j] * mean_rng.normal();
    }
  }

  Rng db_rng(mix_seed(spec.seed, 2));
  Rng query_rng(mix_seed(spec.seed, 3));
  SyntheticData out;
  out.database =
      sample_points(spec.n, d, spec.num_classes, means, noise, db_rng);
  out.queries = sample_points(spec.num_queries, d, spec.num_classes, means,
                              noise, query_rng);
  return out;
}

// ---------------------------------------------------------------------------
// fvecs / ivecs

namespace {

template <typename T>
std::vector<std::vector<T>> parse_vecs(std::span<const std::uint8_t> bytes,
                                       const char* kind) {
  ByteReader in(bytes);
  std::vector<std::vector<T>> rows;
  std::int32_t first_dim = -1;
  while (!in.at_end()) {
    const std::size_t record_start = in.offset();
    const auto d = in.get<std::int32_t>("record header");
    if (d <= 0) {
      throw FormatError(std::string(kind) + " record dimension " +
                            std::to_string(d) + " is not positive",
                        record_start);
    }
    if (first_dim >= 0 && d != first_dim) {
      throw FormatError(std::string(kind) + " record dimension " +
                            std::to_string(d) + " differs from first record (" +
                            std::to_string(first_dim) + ")",
                        record_start);
    }
    first_dim = d;
    std::vector<T> row(static_cast<std::size_t>(d));
    in.get_array(std::span<T>(row), "record payload");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

EmbeddingSet read_fvecs(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  auto rows = parse_vecs<float>(bytes, "fvecs");
  if (rows.empty()) throw FormatError("fvecs file has no records", 0);
  const std::size_t d = rows.front().size();
  std::vector<float> data;
  data.reserve(rows.size() * d);
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  return {rows.size(), d, std::move(data)};
}

void write_fvecs(const EmbeddingView& view, const std::filesystem::path& path) {
  ByteWriter out;
  for (std::size_t i = 0; i < view.size(); ++i) {
    out.put(static_cast<std::int32_t>(view.dim()));
    out.put_array(view.row(i));
  }
  write_file_bytes(path, out.bytes());
}

void write_fvecs(const EmbeddingSet& set, const std::filesystem::path& path) {
  write_fvecs(set.view(), path);
}

std::vector<std::vector<std::int32_t>> read_ivecs(
    const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_vecs<std::int32_t>(bytes, "ivecs");
}

void write_ivecs(const std::vector<std::vector<std::int32_t>>& rows,
                 const std::filesystem::path& path) {
  ByteWriter out;
  for (const auto& r : rows) {
    if (r.empty()) throw ConfigError("ivecs rows must be non-empty");
    out.put(static_cast<std::int32_t>(r.size()));
    out.put_array(std::span<const std::int32_t>(r));
  }
  write_file_bytes(path, out.bytes());
}

std::vector<std::int32_t> read_labels(const std::filesystem::path& path) {
  const auto rows = read_ivecs(path);
  std::vector<std::int32_t> labels;
  labels.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != 1) {
      throw FormatError("label file records must have dimension 1", 0);
    }
    labels.push_back(r[0]);
  }
  return labels;
}

void write_labels(const std::vector<std::int32_t>& labels,
                  const std::filesystem::path& path) {
  std::vector<std::vector<std::int32_t>> rows;
  rows.reserve(labels.size());
  for (auto l : labels) rows.push_back({l});
  write_ivecs(rows, path);
}

}  // namespace adanns
