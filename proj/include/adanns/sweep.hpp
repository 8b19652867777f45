/// @file sweep.hpp
/// @brief Grid sweeps over index configurations producing accuracy/compute
/// frontier tables.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adanns/embedding.hpp"
#include "adanns/kmeans.hpp"

namespace adanns {

enum class IndexFamily {
  kIvf,            ///< conventional IVF, d_c = d_s
  kAdannsIvf,      ///< decoupled d_c / d_s
  kAdannsIvfD,     ///< index at full d, d_hat prefix at query time
  kOpqExhaustive,  ///< OPQ codes on a d_s prefix, exhaustive ADC scan
  kComposite,      ///< IVF on d_c + OPQ on d_s, optional re-rank
};

std::string_view family_name(IndexFamily f);
/// Throws ConfigError for unknown names.
IndexFamily parse_family(std::string_view name);

struct SweepSpec {
  std::shared_ptr<const EmbeddingSet> database;
  std::shared_ptr<const EmbeddingSet> queries;
  IndexFamily family = IndexFamily::kAdannsIvf;
  std::vector<std::size_t> d_c_grid;
  std::vector<std::size_t> d_s_grid;
  std::vector<std::size_t> k_grid;
  std::vector<std::size_t> n_probe_grid{1};
  /// Code bytes (opq-exhaustive, composite).
  std::vector<std::size_t> bytes_grid;
  std::size_t rerank_dim = 0;
  std::size_t shortlist = 0;
  std::size_t opq_iters = 10;
  /// max_iters / tol / init are used; k and seed are set per tuple.
  KmeansConfig kmeans;
  std::uint64_t seed = 0;
  /// Concurrent build groups; 0 = hardware concurrency.
  std::size_t workers = 1;
};

struct FrontierRow {
  std::string family;
  std::size_t d_c = 0;
  std::size_t d_s = 0;
  std::size_t k = 0;
  std::size_t n_p = 0;
  std::size_t bytes = 0;
  double top1 = 0.0;
  /// Fraction of queries whose rank-1 result is the exact d_s-prefix NN.
  double recall_1_at_1 = 0.0;
  double cost = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;

  /// Identifies the configuration tuple (used for resuming).
  std::string key() const;
  friend bool operator==(const FrontierRow&, const FrontierRow&) = default;
};

/// {8, 16, ..., 2048} restricted to values <= max_dim.
std::vector<std::size_t> dimension_ladder(std::size_t max_dim);

/// Seed for the build keyed by (cluster dim, count); shared across families
/// so rows with identical builds coincide.
std::uint64_t tuple_seed(std::uint64_t base, std::size_t dim, std::size_t count);

/// Evaluates every grid tuple once. Rows whose key() is in `skip_keys` are
/// not evaluated. `on_row` receives rows in canonical tuple order as they
/// complete. Failed tuples produce rows with ok = false.
std::vector<FrontierRow> run_sweep(
    const SweepSpec& spec,
    const std::function<void(const FrontierRow&)>& on_row = {},
    const std::set<std::string>& skip_keys = {});

/// Rows not dominated in (higher top1, lower cost), ascending cost, ties in
/// input order. Rows with ok = false are ignored.
std::vector<FrontierRow> pareto_frontier(std::span<const FrontierRow> rows);

/// True when, for every row of `other`, some row of `rows` has cost <= and
/// top1 >= it.
bool weakly_dominates(std::span<const FrontierRow> rows,
                      std::span<const FrontierRow> other);

/// Column order of the frontier CSV.
inline constexpr std::string_view kFrontierCsvHeader =
    "family,d_c,d_s,k,n_p,bytes,top1,recall_1_at_1,cost_flops,seed,status,error";

std::string format_frontier_row(const FrontierRow& row);
FrontierRow parse_frontier_row(std::string_view line);
std::vector<FrontierRow> read_frontier_csv(const std::filesystem::path& path);

/// Run manifest: spec, seed, dataset shape and tool version, as JSON text.
std::string sweep_manifest_json(const SweepSpec& spec);

}  // namespace adanns
