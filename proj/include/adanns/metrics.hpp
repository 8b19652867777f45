/// @file metrics.hpp
/// @brief Retrieval metrics, search-difficulty measures and the IVF cost model.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adanns/embedding.hpp"

namespace adanns {

/// Retrieved neighbor ids per query joined with labels (and optionally exact
/// nearest-neighbor ground truth), plus named scalar results.
struct EvalReport {
  std::vector<std::vector<std::uint32_t>> retrieved;
  std::vector<std::int32_t> query_labels;
  std::vector<std::int32_t> database_labels;
  /// Exact-search neighbor ids per query; optional.
  std::vector<std::vector<std::uint32_t>> ground_truth;
  /// 0 = count distinct database labels.
  std::size_t num_classes = 0;
  std::vector<std::pair<std::string, double>> metrics;

  std::size_t database_size() const noexcept { return database_labels.size(); }
  void add_metric(std::string name, double value) {
    metrics.emplace_back(std::move(name), value);
  }
};

struct Top1Result {
  double accuracy = 0.0;
  /// Queries with an empty retrieved list; they count as incorrect.
  std::vector<std::size_t> empty_queries;
};

/// Fraction of queries whose rank-1 neighbor carries the query's label.
Top1Result top1_accuracy(const EvalReport& report);

/// (sum_Q correct_pred@k / |Q|) * (num_classes / N_D), where correct_pred@k
/// counts label matches among the first k retrieved ids. Not bounded by 1.
double recall_at_k(const EvalReport& report, std::size_t k);

/// Per-query correct_pred@k divided by the number of database items sharing
/// the query label, averaged over queries. In [0, 1].
double label_recall_at_k(const EvalReport& report, std::size_t k);

/// |retrieved ∩ ground_truth| / |ground_truth|.
double k_recall_at_n(std::span<const std::uint32_t> retrieved,
                     std::span<const std::uint32_t> ground_truth);

/// Mean over queries of sum_{i<=k} precision@i * rel_i / min(k, R_q), with
/// R_q the number of database items sharing the query label.
double map_at_k(const EvalReport& report, std::size_t k);

struct RelativeContrast {
  double value = 0.0;
  double mean_d_min = 0.0;
  double mean_d_mean = 0.0;
  /// Queries whose nearest database point sits at distance 0.
  std::size_t zero_min_queries = 0;
};

/// E_q[D_mean] / E_q[D_min] with D the Euclidean distance. When
/// `query_db_ids` is non-empty, database row query_db_ids[q] (if >= 0) is
/// excluded from query q's statistics, for queries drawn from the database.
RelativeContrast relative_contrast(const EmbeddingView& database,
                                   const EmbeddingView& queries,
                                   std::span<const std::int64_t> query_db_ids = {});

/// Half the L1 distance between two distributions given as raw
/// non-negative counts (normalized internally). Same support size required.
double tv_distance(std::span<const double> p, std::span<const double> q);

struct CostParams {
  double d_s = 0;
  double k = 0;
  double n_p = 1;
  double n_database = 0;
};

/// FLOPs per query: d_s * k + n_p * d_s * N_D / k.
double ivf_query_cost(const CostParams& c);

/// Fills report.metrics with top1 plus recall@k, label_recall@k and map@k for
/// every k in `ks` that the retrieved lists can support, and
/// k-recall@N against ground truth when present.
void evaluate(EvalReport& report, std::span<const std::size_t> ks);

/// "metric,value" CSV, one row per metric.
void write_metrics_csv(const EvalReport& report,
                       const std::filesystem::path& path);

/// One JSON object per query: index, label, retrieved ids, rank-1 correctness.
void write_per_query_jsonl(const EvalReport& report,
                           const std::filesystem::path& path);

}  // namespace adanns
