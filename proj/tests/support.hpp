#pragma once

#include <unistd.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "adanns/embedding.hpp"

namespace adanns::test {

/// Gaussian matrix from std::mt19937_64; independent of the library RNG.
inline EmbeddingSet random_set(std::size_t n, std::size_t d, std::uint64_t seed,
                               double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<float> data(n * d);
  for (auto& v : data) v = static_cast<float>(nd(gen));
  return {n, d, std::move(data)};
}

/// Blocks of `block` coordinates; coordinates within a block are correlated,
/// blocks are independent.
inline EmbeddingSet block_data(std::size_t n, std::size_t d, std::size_t block,
                        std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<float> data(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < d; b += block) {
      const double shared = nd(gen);
      for (std::size_t j = b; j < b + block; ++j) {
        data[i * d + j] = static_cast<float>(shared * (1.0 + double(j - b)) + 0.3 * nd(gen));
      }
    }
  }
  return {n, d, std::move(data)};
}

/// Applies one Haar-random orthogonal matrix to every row.
inline EmbeddingSet rotate_rows(const EmbeddingSet& s, std::uint64_t seed) {
  const std::size_t d = s.dim();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd g(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) g(i, j) = nd(gen);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  std::vector<float> out(s.size() * d);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      double acc = 0;
      for (std::size_t b = 0; b < d; ++b) acc += q(a, b) * s.row(i)[b];
      out[i * d + a] = static_cast<float>(acc);
    }
  }
  return {s.size(), d, std::move(out)};
}

/// Same as random_set but coordinate j is scaled by 1 / sqrt(j + 1).
inline EmbeddingSet anisotropic_set(std::size_t n, std::size_t d,
                                    std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<float> data(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      data[i * d + j] = static_cast<float>(nd(gen) / std::sqrt(j + 1.0));
    }
  }
  return {n, d, std::move(data)};
}

inline std::shared_ptr<const EmbeddingSet> share(EmbeddingSet s) {
  return std::make_shared<const EmbeddingSet>(std::move(s));
}

/// Squared L2 over the first m coordinates, accumulated in double.
inline double l2_sq_double(std::span<const float> a, std::span<const float> b,
                           std::size_t m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double t = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    s += t * t;
  }
  return s;
}

struct Hit {
  std::uint32_t id;
  double distance;
};

/// Exact top-k over the m-prefix, ties by lower id, distances in double.
inline std::vector<Hit> brute_force(const EmbeddingSet& db,
                                    std::span<const float> q, std::size_t m,
                                    std::size_t topk) {
  std::vector<Hit> all(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    all[i] = {static_cast<std::uint32_t>(i), l2_sq_double(db.row(i), q, m)};
  }
  std::stable_sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    return a.distance < b.distance;
  });
  all.resize(std::min(topk, all.size()));
  return all;
}

inline bool rel_close(double a, double b, double rel, double abs_floor = 1e-6) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)),
                                     abs_floor);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("adanns_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace adanns::test
