#include "adanns/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adanns/distance.hpp"
#include "adanns/error.hpp"
#include "adanns/parallel.hpp"
#include "adanns/random.hpp"

namespace adanns {

namespace {

void validate(const KmeansConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("k-means requires k >= 1");
  if (cfg.max_iters < 1) throw ConfigError("k-means requires max_iters >= 1");
  if (!(cfg.tol >= 0.0)) throw ConfigError("k-means requires tol >= 0");
  if (!(cfg.sample_fraction > 0.0 && cfg.sample_fraction <= 1.0)) {
    throw ConfigError("k-means sample_fraction must lie in (0, 1]");
  }
}

/// Contiguous copy of the training rows (optionally a seeded subsample).
std::vector<float> gather_training(const EmbeddingView& points,
                                   const KmeansConfig& cfg, Rng& rng) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim();
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (cfg.sample_fraction < 1.0) {
    const auto want = static_cast<std::size_t>(
        std::llround(cfg.sample_fraction * static_cast<double>(n)));
    const std::size_t m = std::clamp(want, std::min(cfg.k, n), n);
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(rows[i], rows[i + rng.below(n - i)]);
    }
    rows.resize(m);
    std::sort(rows.begin(), rows.end());
  }
  std::vector<float> out;
  out.reserve(rows.size() * dim);
  for (std::size_t r : rows) {
    const auto row = points.row(r);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

Centroids init_plus_plus(const EmbeddingView& pts, std::size_t k, Rng& rng) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.dim();
  Centroids c{k, dim, std::vector<float>(k * dim), 0.0, {}};
  std::vector<double> d2(n);
  std::vector<char> chosen(n, 0);

  auto take = [&](std::size_t idx, std::size_t slot) {
    chosen[idx] = 1;
    const auto row = pts.row(idx);
    std::copy(row.begin(), row.end(), c.data.begin() + slot * dim);
    for (std::size_t i = 0; i < n; ++i) {
      const double dist = l2_sq(pts.row(i).data(), row.data(), dim);
      d2[i] = slot == 0 ? dist : std::min(d2[i], dist);
    }
  };

  take(rng.below(n), 0);
  for (std::size_t slot = 1; slot < k; ++slot) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double run = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        run += d2[i];
        if (run > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    if (pick == n) {
      // All remaining mass is zero (duplicates); fall back to the first
      // point not yet used so the seeds stay distinct by index.
      pick = static_cast<std::size_t>(
          std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
      if (pick == n) pick = 0;
    }
    take(pick, slot);
  }
  return c;
}

Centroids init_random_subset(const EmbeddingView& pts, std::size_t k,
                             Rng& rng) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.dim();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  }
  Centroids c{k, dim, std::vector<float>(k * dim), 0.0, {}};
  for (std::size_t s = 0; s < k; ++s) {
    const auto row = pts.row(idx[s]);
    std::copy(row.begin(), row.end(), c.data.begin() + s * dim);
  }
  return c;
}

void assign_into(const EmbeddingView& pts, const Centroids& c,
                 std::size_t workers, std::vector<std::uint32_t>& labels,
                 std::vector<float>& dists) {
  labels.resize(pts.size());
  dists.resize(pts.size());
  parallel_for(pts.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      labels[i] = nearest_centroid(pts.row(i), c, c.dim, &dists[i]);
    }
  });
}

/// Lloyd iterations; the history records J(assignment_t, centroids_t) after
/// each update, which can only decrease.
void lloyd(const EmbeddingView& pts, Centroids& c, const KmeansConfig& cfg) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.dim();
  const std::size_t k = c.k;
  std::vector<std::uint32_t> labels;
  std::vector<float> dists;
  std::vector<std::size_t> counts(k);
  std::vector<double> sums(k * dim);

  c.history.clear();
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    assign_into(pts, c, cfg.workers, labels, dists);

    std::fill(counts.begin(), counts.end(), 0);
    for (auto l : labels) ++counts[l];

    // Empty-cluster repair: move the point farthest from its centroid (among
    // clusters that can spare one) into the empty cluster.
    for (std::size_t e = 0; e < k; ++e) {
      if (counts[e] != 0) continue;
      std::size_t far = n;
      float far_dist = -1.0f;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[labels[i]] > 1 && dists[i] > far_dist) {
          far = i;
          far_dist = dists[i];
        }
      }
      if (far == n) break;
      --counts[labels[far]];
      labels[far] = static_cast<std::uint32_t>(e);
      dists[far] = 0.0f;
      counts[e] = 1;
    }

    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = pts.row(i);
      double* s = sums.data() + std::size_t{labels[i]} * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += row[j];
    }
    for (std::size_t cl = 0; cl < k; ++cl) {
      if (counts[cl] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[cl]);
      float* out = c.data.data() + cl * dim;
      for (std::size_t j = 0; j < dim; ++j) {
        out[j] = static_cast<float>(sums[cl * dim + j] * inv);
      }
    }

    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      obj += l2_sq(pts.row(i).data(), c.data.data() + labels[i] * dim, dim);
    }
    const double prev = c.history.empty() ? 0.0 : c.history.back();
    c.history.push_back(obj);
    if (obj == 0.0) break;
    if (iter > 0 && prev > 0.0 && (prev - obj) / prev < cfg.tol) break;
  }

  assign_into(pts, c, cfg.workers, labels, dists);
  c.objective = std::accumulate(dists.begin(), dists.end(), 0.0);
}

}  // namespace

std::uint32_t nearest_centroid(std::span<const float> x,
                               const Centroids& centroids, std::size_t dim,
                               float* distance) noexcept {
  std::uint32_t best = 0;
  float best_dist = l2_sq(x.data(), centroids.data.data(), dim);
  for (std::size_t c = 1; c < centroids.k; ++c) {
    const float dist =
        l2_sq(x.data(), centroids.data.data() + c * centroids.dim, dim);
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<std::uint32_t>(c);
    }
  }
  if (distance != nullptr) *distance = best_dist;
  return best;
}

std::vector<std::uint32_t> assign(const EmbeddingView& points,
                                  const Centroids& centroids,
                                  std::size_t workers) {
  if (points.dim() != centroids.dim) {
    throw DimensionError("assign: points have " +
                         std::to_string(points.dim()) +
                         " dims, centroids have " +
                         std::to_string(centroids.dim));
  }
  if (centroids.k == 0) throw ConfigError("assign: no centroids");
  std::vector<std::uint32_t> labels;
  std::vector<float> dists;
  assign_into(points, centroids, workers, labels, dists);
  return labels;
}

Centroids train_kmeans(const EmbeddingView& points, const KmeansConfig& cfg) {
  validate(cfg);
  if (points.size() < cfg.k) {
    throw InsufficientDataError("k-means needs at least k=" +
                                std::to_string(cfg.k) + " points, got " +
                                std::to_string(points.size()));
  }
  Rng rng(cfg.seed);
  const std::vector<float> train = gather_training(points, cfg, rng);
  const EmbeddingView pts(train.data(), train.size() / points.dim(),
                          points.dim(), points.dim());

  Centroids c = cfg.init == KmeansInit::kPlusPlus
                    ? init_plus_plus(pts, cfg.k, rng)
                    : init_random_subset(pts, cfg.k, rng);
  lloyd(pts, c, cfg);
  return c;
}

Centroids refine_kmeans(const EmbeddingView& points, Centroids init,
                        const KmeansConfig& cfg) {
  validate(cfg);
  if (init.dim != points.dim()) {
    throw DimensionError("refine_kmeans: centroid dimension mismatch");
  }
  if (points.size() < init.k) {
    throw InsufficientDataError("k-means needs at least k points");
  }
  lloyd(points, init, cfg);
  return init;
}

}  // namespace adanns
