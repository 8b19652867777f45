#include "adanns/quantization.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "adanns/error.hpp"

namespace adanns {

namespace {

constexpr char kCodecMagic[] = "ADNSPQC1";
constexpr char kCodesMagic[] = "ADNSCOD1";
constexpr std::uint32_t kCodecVersion = 1;

using RowMatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixD =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_divisible(std::size_t dim, std::size_t m) {
  if (m == 0 || dim % m != 0) {
    throw ConfigError("PQ sub-space count m=" + std::to_string(m) +
                      " does not divide dimension " + std::to_string(dim));
  }
}

std::vector<float> contiguous(const EmbeddingView& v) {
  std::vector<float> out;
  out.reserve(v.size() * v.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto r = v.row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

/// One k-means codebook per sub-space of the n x dim row-major `data`.
std::vector<float> train_codebooks(const std::vector<float>& data,
                                   std::size_t n, std::size_t dim,
                                   std::size_t m, const KmeansConfig& kcfg) {
  const std::size_t dsub = dim / m;
  std::vector<float> books(m * kPqCodewords * dsub);
  for (std::size_t j = 0; j < m; ++j) {
    const EmbeddingView slice(data.data() + j * dsub, n, dsub, dim);
    KmeansConfig cfg = kcfg;
    cfg.k = std::min(kPqCodewords, n);
    cfg.seed = kcfg.seed + j;
    const Centroids c = train_kmeans(slice, cfg);
    float* out = books.data() + j * kPqCodewords * dsub;
    std::copy(c.data.begin(), c.data.end(), out);
    for (std::size_t e = c.k; e < kPqCodewords; ++e) {
      std::copy(c.data.begin(), c.data.begin() + dsub, out + e * dsub);
    }
  }
  return books;
}

}  // namespace

// ---------------------------------------------------------------------------
// PqCodes

void PqCodes::write(ByteWriter& out) const {
  out.put_tag(std::string_view(kCodesMagic, 8));
  out.put(static_cast<std::uint64_t>(n));
  out.put(static_cast<std::uint32_t>(m));
  out.put_array(std::span<const std::uint8_t>(bytes));
}

PqCodes PqCodes::read(ByteReader& in) {
  in.expect_tag(std::string_view(kCodesMagic, 8));
  PqCodes codes;
  codes.n = in.get<std::uint64_t>("code count");
  codes.m = in.get<std::uint32_t>("code width");
  if (codes.m == 0) throw FormatError("code width is zero", in.offset() - 4);
  in.require(codes.n * codes.m, "code matrix");
  codes.bytes.resize(codes.n * codes.m);
  in.get_array(std::span<std::uint8_t>(codes.bytes), "code matrix");
  return codes;
}

// ---------------------------------------------------------------------------
// PqCodec

PqCodec::PqCodec(std::size_t d_q, std::size_t m, std::vector<float> codebooks,
                 std::optional<std::vector<float>> rotation)
    : d_q_(d_q), m_(m), codebooks_(std::move(codebooks)),
      rotation_(std::move(rotation)) {
  check_divisible(d_q_, m_);
  if (codebooks_.size() != m_ * kPqCodewords * sub_dim()) {
    throw ConfigError("codebook block has wrong size");
  }
  if (rotation_ && rotation_->size() != d_q_ * d_q_) {
    throw ConfigError("rotation must be d_q x d_q");
  }
}

std::vector<float> PqCodec::rotate(std::span<const float> x) const {
  if (x.size() < d_q_) throw DimensionError("vector shorter than codec d_q");
  if (!rotation_) return {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d_q_)};
  std::vector<float> y(d_q_);
  const float* r = rotation_->data();
  for (std::size_t i = 0; i < d_q_; ++i, r += d_q_) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d_q_; ++j) acc += double(r[j]) * x[j];
    y[i] = static_cast<float>(acc);
  }
  return y;
}

void PqCodec::encode_one(std::span<const float> x,
                         std::span<std::uint8_t> out) const {
  const std::vector<float> y = rotate(x);
  const std::size_t dsub = sub_dim();
  for (std::size_t j = 0; j < m_; ++j) {
    const float* sub = y.data() + j * dsub;
    const float* book = codebooks_.data() + j * kPqCodewords * dsub;
    std::size_t best = 0;
    float best_dist = l2_sq(sub, book, dsub);
    for (std::size_t c = 1; c < kPqCodewords; ++c) {
      const float dist = l2_sq(sub, book + c * dsub, dsub);
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    out[j] = static_cast<std::uint8_t>(best);
  }
}

PqCodes PqCodec::encode(const EmbeddingView& points) const {
  if (points.dim() != d_q_) {
    throw DimensionError("encode: points have " + std::to_string(points.dim()) +
                         " dims, codec expects " + std::to_string(d_q_));
  }
  PqCodes codes{points.size(), m_, std::vector<std::uint8_t>(points.size() * m_)};
  for (std::size_t i = 0; i < points.size(); ++i) {
    encode_one(points.row(i), {codes.bytes.data() + i * m_, m_});
  }
  return codes;
}

std::vector<float> PqCodec::decode_one(std::span<const std::uint8_t> code) const {
  const std::size_t dsub = sub_dim();
  std::vector<float> y(d_q_);
  for (std::size_t j = 0; j < m_; ++j) {
    const auto cw = codeword(j, code[j]);
    std::copy(cw.begin(), cw.end(), y.begin() + j * dsub);
  }
  if (!rotation_) return y;
  // x = R^T y
  std::vector<double> x(d_q_, 0.0);
  const float* r = rotation_->data();
  for (std::size_t i = 0; i < d_q_; ++i, r += d_q_) {
    for (std::size_t j = 0; j < d_q_; ++j) x[j] += double(r[j]) * y[i];
  }
  return {x.begin(), x.end()};
}

std::vector<float> PqCodec::decode(const PqCodes& codes) const {
  if (codes.m != m_) throw DimensionError("decode: code width mismatch");
  std::vector<float> out;
  out.reserve(codes.n * d_q_);
  for (std::size_t i = 0; i < codes.n; ++i) {
    const auto x = decode_one(codes.code(i));
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

std::vector<double> PqCodec::reconstruction_errors(
    const EmbeddingView& points) const {
  const PqCodes codes = encode(points);
  std::vector<double> err(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto x = decode_one(codes.code(i));
    err[i] = l2_sq(points.row(i).data(), x.data(), d_q_);
  }
  return err;
}

double PqCodec::mse(const EmbeddingView& points) const {
  if (points.empty()) return 0.0;
  const auto err = reconstruction_errors(points);
  return std::accumulate(err.begin(), err.end(), 0.0) /
         static_cast<double>(err.size());
}

AdcTable PqCodec::adc_table(std::span<const float> query) const {
  if (query.size() < d_q_) {
    throw DimensionError("ADC: query has " + std::to_string(query.size()) +
                         " dims, codec needs " + std::to_string(d_q_));
  }
  const std::vector<float> q = rotate(query);
  const std::size_t dsub = sub_dim();
  AdcTable table{m_, std::vector<float>(m_ * kPqCodewords)};
  for (std::size_t j = 0; j < m_; ++j) {
    const float* sub = q.data() + j * dsub;
    const float* book = codebooks_.data() + j * kPqCodewords * dsub;
    float* row = table.entries.data() + j * kPqCodewords;
    for (std::size_t c = 0; c < kPqCodewords; ++c) {
      row[c] = l2_sq(sub, book + c * dsub, dsub);
    }
  }
  return table;
}

std::vector<float> PqCodec::adc_distance(std::span<const float> query,
                                         const PqCodes& codes) const {
  if (codes.m != m_) throw DimensionError("ADC: code width mismatch");
  const AdcTable table = adc_table(query);
  std::vector<float> out(codes.n);
  for (std::size_t i = 0; i < codes.n; ++i) out[i] = table(codes.code(i));
  return out;
}

void PqCodec::write(ByteWriter& out) const {
  out.put_tag(std::string_view(kCodecMagic, 8));
  out.put(kCodecVersion);
  out.put(static_cast<std::uint32_t>(d_q_));
  out.put(static_cast<std::uint32_t>(m_));
  out.put(static_cast<std::uint32_t>(kPqBits));
  out.put(static_cast<std::uint8_t>(rotation_ ? 1 : 0));
  if (rotation_) out.put_array(std::span<const float>(*rotation_));
  out.put_array(std::span<const float>(codebooks_));
}

PqCodec PqCodec::read(ByteReader& in) {
  in.expect_tag(std::string_view(kCodecMagic, 8));
  const std::size_t header_at = in.offset();
  if (in.get<std::uint32_t>("version") != kCodecVersion) {
    throw FormatError("unsupported codec version", header_at);
  }
  const auto d_q = in.get<std::uint32_t>("d_q");
  const auto m = in.get<std::uint32_t>("m");
  const auto b = in.get<std::uint32_t>("bits");
  const auto flag = in.get<std::uint8_t>("rotation flag");
  if (d_q == 0 || m == 0 || d_q % m != 0 || b != kPqBits || flag > 1) {
    throw FormatError("invalid codec header", header_at);
  }
  std::optional<std::vector<float>> rotation;
  if (flag == 1) {
    rotation.emplace(std::size_t{d_q} * d_q);
    in.get_array(std::span<float>(*rotation), "rotation block");
  }
  std::vector<float> books(std::size_t{m} * kPqCodewords * (d_q / m));
  in.get_array(std::span<float>(books), "codebook block");
  return {d_q, m, std::move(books), std::move(rotation)};
}

void PqCodec::save(const std::filesystem::path& path) const {
  ByteWriter out;
  write(out);
  write_file_bytes(path, out.bytes());
}

PqCodec PqCodec::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader in(bytes);
  PqCodec codec = read(in);
  if (!in.at_end()) throw FormatError("trailing bytes after codec", in.offset());
  return codec;
}

// ---------------------------------------------------------------------------
// Training

PqCodec train_pq(const EmbeddingView& points, std::size_t m,
                 const KmeansConfig& kcfg) {
  check_divisible(points.dim(), m);
  if (points.empty()) throw InsufficientDataError("PQ training needs points");
  const std::vector<float> data = contiguous(points);
  return {points.dim(), m,
          train_codebooks(data, points.size(), points.dim(), m, kcfg)};
}

PqCodec train_opq(const EmbeddingView& points, std::size_t m,
                  std::size_t iters, const KmeansConfig& kcfg,
                  std::vector<double>* objective_history,
                  std::size_t refine_iters) {
  const std::size_t n = points.size();
  const std::size_t d = points.dim();
  check_divisible(d, m);
  if (iters < 1) throw ConfigError("OPQ requires iters >= 1");
  if (points.empty()) throw InsufficientDataError("OPQ training needs points");
  const std::size_t dsub = d / m;

  const std::vector<float> xdata = contiguous(points);
  const Eigen::Map<const RowMatrixF> x(xdata.data(), static_cast<Eigen::Index>(n),
                                       static_cast<Eigen::Index>(d));
  const RowMatrixD xd = x.cast<double>();

  RowMatrixD rot = RowMatrixD::Identity(static_cast<Eigen::Index>(d),
                                        static_cast<Eigen::Index>(d));
  std::vector<float> ydata = xdata;
  std::vector<float> books = train_codebooks(ydata, n, d, m, kcfg);
  const std::size_t k = std::min(kPqCodewords, n);

  // Nearest-codeword reconstructions of the rotated data; returns the
  // total squared error.
  std::vector<float> recon(n * d);
  auto reconstruct = [&]() {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      Centroids c{k, dsub, {}, 0.0, {}};
      c.data.assign(books.begin() + static_cast<std::ptrdiff_t>(j * kPqCodewords * dsub),
                    books.begin() + static_cast<std::ptrdiff_t>(j * kPqCodewords * dsub + k * dsub));
      for (std::size_t i = 0; i < n; ++i) {
        const float* sub = ydata.data() + i * d + j * dsub;
        float dist = 0.0f;
        const auto best = nearest_centroid({sub, dsub}, c, dsub, &dist);
        std::copy_n(c.data.data() + best * dsub, dsub,
                    recon.data() + i * d + j * dsub);
        total += dist;
      }
    }
    return total;
  };

  double objective = reconstruct();
  if (objective_history) {
    objective_history->clear();
    objective_history->push_back(objective);
  }

  KmeansConfig refine = kcfg;
  refine.max_iters = std::max<std::size_t>(1, refine_iters);
  refine.tol = 0.0;

  for (std::size_t it = 0; it < iters; ++it) {
    // Procrustes: R = argmin ||X R^T - Y_hat||_F over orthonormal R.
    const Eigen::Map<const RowMatrixF> yhat(recon.data(),
                                           static_cast<Eigen::Index>(n),
                                           static_cast<Eigen::Index>(d));
    const Eigen::MatrixXd cross = yhat.cast<double>().transpose() * xd;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(cross,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = svd.matrixU() * svd.matrixV().transpose();

    const RowMatrixD y = xd * rot.transpose();
    for (std::size_t i = 0; i < n * d; ++i) {
      ydata[i] = static_cast<float>(y.data()[i]);
    }

    for (std::size_t j = 0; j < m; ++j) {
      const EmbeddingView slice(ydata.data() + j * dsub, n, dsub, d);
      Centroids c{k, dsub, {}, 0.0, {}};
      float* book = books.data() + j * kPqCodewords * dsub;
      c.data.assign(book, book + k * dsub);
      c = refine_kmeans(slice, std::move(c), refine);
      std::copy(c.data.begin(), c.data.end(), book);
      for (std::size_t e = k; e < kPqCodewords; ++e) {
        std::copy_n(book, dsub, book + e * dsub);
      }
    }

    objective = reconstruct();
    if (objective_history) objective_history->push_back(objective);
  }

  std::vector<float> rotation(d * d);
  for (std::size_t i = 0; i < d * d; ++i) {
    rotation[i] = static_cast<float>(rot.data()[i]);
  }
  return {d, m, std::move(books), std::move(rotation)};
}

std::vector<Neighbor> adc_search(const PqCodec& codec, const PqCodes& codes,
                                 std::span<const float> query,
                                 std::size_t topk) {
  if (codes.m != codec.m()) throw DimensionError("ADC: code width mismatch");
  const AdcTable table = codec.adc_table(query);
  std::vector<Neighbor> all(codes.n);
  for (std::size_t i = 0; i < codes.n; ++i) {
    all[i] = {static_cast<std::uint32_t>(i), table(codes.code(i))};
  }
  keep_topk(all, topk);
  return all;
}

AdannsOpqResult train_adanns_opq(const EmbeddingSet& database,
                                 const PqBudget& budget,
                                 const EmbeddingSet& queries,
                                 const OpqTrainConfig& cfg) {
  if (budget.candidate_dims.empty()) {
    throw ConfigError("budget search needs at least one candidate dimension");
  }
  if (budget.bytes < 1) throw ConfigError("byte budget must be >= 1");
  if (!database.has_labels() || !queries.has_labels()) {
    throw ConfigError("budget search scores top-1 and needs labels");
  }

  AdannsOpqResult result;
  bool have_best = false;
  for (std::size_t dim : budget.candidate_dims) {
    BudgetEntry entry{dim, 0.0, false, {}};
    if (dim < 1 || dim > database.dim() || dim > queries.dim()) {
      entry.skipped = true;
      entry.note = "dimension exceeds data";
    } else if (dim % budget.bytes != 0) {
      entry.skipped = true;
      entry.note = "m=" + std::to_string(budget.bytes) + " does not divide " +
                   std::to_string(dim);
    }
    if (entry.skipped) {
      result.table.push_back(std::move(entry));
      continue;
    }

    PqCodec codec = train_opq(database.prefix(dim), budget.bytes, cfg.iters,
                              cfg.kmeans);
    const PqCodes codes = codec.encode(database.prefix(dim));
    std::size_t correct = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto top = adc_search(codec, codes, queries.row(q), 1);
      if (!top.empty() &&
          database.labels()[top.front().id] == queries.labels()[q]) {
        ++correct;
      }
    }
    entry.top1 = queries.empty() ? 0.0
                                 : static_cast<double>(correct) /
                                       static_cast<double>(queries.size());
    const bool better =
        !have_best || entry.top1 > result.best_top1 ||
        (entry.top1 == result.best_top1 && dim < result.best_dim);
    if (better) {
      have_best = true;
      result.best_dim = dim;
      result.best_top1 = entry.top1;
      result.codec = std::move(codec);
    }
    result.table.push_back(std::move(entry));
  }
  if (!have_best) {
    throw ConfigError("no candidate dimension is compatible with the budget");
  }
  return result;
}

}  // namespace adanns
