#include "adanns/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "adanns/distance.hpp"
#include "adanns/error.hpp"

namespace adanns {

namespace {

void require_labels(const EvalReport& r) {
  if (r.query_labels.empty() || r.database_labels.empty()) {
    throw ConfigError("metric requires query and database labels");
  }
  if (r.query_labels.size() != r.retrieved.size()) {
    throw ConfigError("query label count does not match retrieved lists");
  }
  const std::size_t n = r.database_labels.size();
  for (const auto& list : r.retrieved) {
    for (auto id : list) {
      if (id >= n) {
        throw ConfigError("retrieved id " + std::to_string(id) +
                          " outside database of size " + std::to_string(n));
      }
    }
  }
}

std::size_t class_count(const EvalReport& r) {
  if (r.num_classes > 0) return r.num_classes;
  std::unordered_set<std::int32_t> distinct(r.database_labels.begin(),
                                            r.database_labels.end());
  return distinct.size();
}

std::size_t correct_at(const EvalReport& r, std::size_t q, std::size_t k) {
  const auto& list = r.retrieved[q];
  const std::size_t upto = std::min(k, list.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < upto; ++i) {
    if (r.database_labels[list[i]] == r.query_labels[q]) ++hits;
  }
  return hits;
}

void require_depth(const EvalReport& r, std::size_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  for (const auto& list : r.retrieved) {
    if (list.size() < k) {
      throw ConfigError("k=" + std::to_string(k) +
                        " exceeds a retrieved list of length " +
                        std::to_string(list.size()));
    }
  }
}

std::unordered_map<std::int32_t, std::size_t> label_counts(
    const EvalReport& r) {
  std::unordered_map<std::int32_t, std::size_t> counts;
  for (auto l : r.database_labels) ++counts[l];
  return counts;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

}  // namespace

Top1Result top1_accuracy(const EvalReport& report) {
  require_labels(report);
  Top1Result out;
  std::size_t correct = 0;
  for (std::size_t q = 0; q < report.retrieved.size(); ++q) {
    if (report.retrieved[q].empty()) {
      out.empty_queries.push_back(q);
      continue;
    }
    correct += correct_at(report, q, 1);
  }
  out.accuracy = report.retrieved.empty()
                     ? 0.0
                     : static_cast<double>(correct) /
                           static_cast<double>(report.retrieved.size());
  return out;
}

double recall_at_k(const EvalReport& report, std::size_t k) {
  require_labels(report);
  require_depth(report, k);
  if (report.retrieved.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t q = 0; q < report.retrieved.size(); ++q) {
    total += static_cast<double>(correct_at(report, q, k));
  }
  const double per_query = total / static_cast<double>(report.retrieved.size());
  return per_query * static_cast<double>(class_count(report)) /
         static_cast<double>(report.database_size());
}

double label_recall_at_k(const EvalReport& report, std::size_t k) {
  require_labels(report);
  require_depth(report, k);
  if (report.retrieved.empty()) return 0.0;
  const auto counts = label_counts(report);
  double total = 0.0;
  for (std::size_t q = 0; q < report.retrieved.size(); ++q) {
    const auto it = counts.find(report.query_labels[q]);
    if (it == counts.end()) continue;
    total += static_cast<double>(correct_at(report, q, k)) /
             static_cast<double>(it->second);
  }
  return total / static_cast<double>(report.retrieved.size());
}

double k_recall_at_n(std::span<const std::uint32_t> retrieved,
                     std::span<const std::uint32_t> ground_truth) {
  if (ground_truth.empty()) throw ConfigError("k-recall needs ground truth");
  const std::unordered_set<std::uint32_t> got(retrieved.begin(), retrieved.end());
  const std::unordered_set<std::uint32_t> truth(ground_truth.begin(),
                                                ground_truth.end());
  std::size_t hits = 0;
  for (auto id : truth) hits += got.count(id);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double map_at_k(const EvalReport& report, std::size_t k) {
  require_labels(report);
  if (k < 1) throw ConfigError("k must be >= 1");
  if (report.retrieved.empty()) return 0.0;
  const auto counts = label_counts(report);
  double total = 0.0;
  for (std::size_t q = 0; q < report.retrieved.size(); ++q) {
    const auto it = counts.find(report.query_labels[q]);
    if (it == counts.end()) continue;
    const auto& list = report.retrieved[q];
    const std::size_t upto = std::min(k, list.size());
    std::size_t hits = 0;
    double ap = 0.0;
    for (std::size_t i = 0; i < upto; ++i) {
      if (report.database_labels[list[i]] == report.query_labels[q]) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(i + 1);
      }
    }
    total += ap / static_cast<double>(std::min(k, it->second));
  }
  return total / static_cast<double>(report.retrieved.size());
}

RelativeContrast relative_contrast(const EmbeddingView& database,
                                   const EmbeddingView& queries,
                                   std::span<const std::int64_t> query_db_ids) {
  if (database.empty()) throw ConfigError("relative contrast: empty database");
  if (queries.empty()) throw ConfigError("relative contrast: no queries");
  if (database.dim() != queries.dim()) {
    throw DimensionError("relative contrast: dimension mismatch");
  }
  if (!query_db_ids.empty() && query_db_ids.size() != queries.size()) {
    throw ConfigError("relative contrast: one database id per query required");
  }
  const std::size_t dim = database.dim();
  RelativeContrast rc;
  double sum_min = 0.0;
  double sum_mean = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const std::int64_t self = query_db_ids.empty() ? -1 : query_db_ids[q];
    const auto query = queries.row(q);
    double d_min = std::numeric_limits<double>::infinity();
    double d_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < database.size(); ++i) {
      if (static_cast<std::int64_t>(i) == self) continue;
      const double dist =
          std::sqrt(static_cast<double>(l2_sq(query.data(), database.row(i).data(), dim)));
      d_min = std::min(d_min, dist);
      d_sum += dist;
      ++counted;
    }
    if (counted == 0) throw ConfigError("relative contrast: nothing to compare");
    if (d_min == 0.0) ++rc.zero_min_queries;
    sum_min += d_min;
    sum_mean += d_sum / static_cast<double>(counted);
  }
  const auto nq = static_cast<double>(queries.size());
  rc.mean_d_min = sum_min / nq;
  rc.mean_d_mean = sum_mean / nq;
  rc.value = rc.mean_d_min > 0.0
                 ? rc.mean_d_mean / rc.mean_d_min
                 : std::numeric_limits<double>::infinity();
  return rc;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ConfigError("total variation: supports differ in size");
  }
  if (p.empty()) throw ConfigError("total variation: empty support");
  auto total = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw ConfigError("total variation: entries must be finite and >= 0");
      }
      s += x;
    }
    if (s <= 0.0) throw ConfigError("total variation: zero total mass");
    return s;
  };
  const double sp = total(p);
  const double sq = total(q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += std::abs(p[i] / sp - q[i] / sq);
  }
  return std::min(1.0, 0.5 * acc);
}

double ivf_query_cost(const CostParams& c) {
  if (!(c.d_s > 0 && c.k > 0 && c.n_p > 0 && c.n_database > 0)) {
    throw ConfigError("cost model parameters must be positive");
  }
  if (c.n_p > c.k) throw ConfigError("cost model: n_p exceeds k");
  return c.d_s * c.k + c.n_p * c.d_s * c.n_database / c.k;
}

void evaluate(EvalReport& report, std::span<const std::size_t> ks) {
  report.metrics.clear();
  const Top1Result top1 = top1_accuracy(report);
  report.add_metric("top1", top1.accuracy);
  report.add_metric("empty_queries", static_cast<double>(top1.empty_queries.size()));
  std::size_t depth = report.retrieved.empty() ? 0 : report.retrieved.front().size();
  for (const auto& list : report.retrieved) depth = std::min(depth, list.size());
  for (std::size_t k : ks) {
    if (k < 1 || k > depth) continue;
    const std::string suffix = "@" + std::to_string(k);
    report.add_metric("recall" + suffix, recall_at_k(report, k));
    report.add_metric("label_recall" + suffix, label_recall_at_k(report, k));
    report.add_metric("map" + suffix, map_at_k(report, k));
  }
  if (!report.ground_truth.empty()) {
    if (report.ground_truth.size() != report.retrieved.size()) {
      throw ConfigError("ground truth count does not match retrieved lists");
    }
    for (std::size_t k : ks) {
      bool ok = true;
      for (const auto& gt : report.ground_truth) ok = ok && gt.size() >= k;
      if (k < 1 || !ok) continue;
      double sum = 0.0;
      for (std::size_t q = 0; q < report.retrieved.size(); ++q) {
        sum += k_recall_at_n(report.retrieved[q],
                             std::span(report.ground_truth[q]).first(k));
      }
      report.add_metric(std::to_string(k) + "-recall@" + std::to_string(depth),
                        sum / static_cast<double>(report.retrieved.size()));
    }
  }
}

void write_metrics_csv(const EvalReport& report,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "metric,value\n";
  for (const auto& [name, value] : report.metrics) {
    out << name << ',' << format_double(value) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_per_query_jsonl(const EvalReport& report,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (std::size_t q = 0; q < report.retrieved.size(); ++q) {
    nlohmann::json row;
    row["query"] = q;
    if (q < report.query_labels.size()) row["label"] = report.query_labels[q];
    row["retrieved"] = report.retrieved[q];
    if (q < report.query_labels.size() && !report.retrieved[q].empty() &&
        report.retrieved[q][0] < report.database_labels.size()) {
      row["correct_at_1"] = report.database_labels[report.retrieved[q][0]] ==
                            report.query_labels[q];
    }
    out << row.dump() << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace adanns
