#include "adanns/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include <nlohmann/json.hpp>

#include "adanns/composite.hpp"
#include "adanns/distance.hpp"
#include "adanns/error.hpp"
#include "adanns/ivf.hpp"
#include "adanns/metrics.hpp"
#include "adanns/parallel.hpp"
#include "adanns/quantization.hpp"
#include "adanns/random.hpp"

#ifndef ADANNS_VERSION
#define ADANNS_VERSION "0.0.0"
#endif

namespace adanns {

namespace {

struct Tuple {
  std::size_t d_c = 0;
  std::size_t d_s = 0;
  std::size_t k = 0;
  std::size_t n_p = 0;
  std::size_t bytes = 0;
};

/// Tuples sharing one index build.
struct Group {
  std::vector<Tuple> tuples;
};

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

FrontierRow blank_row(const SweepSpec& spec, const Tuple& t) {
  FrontierRow row;
  row.family = std::string(family_name(spec.family));
  row.d_c = t.d_c;
  row.d_s = t.d_s;
  row.k = t.k;
  row.n_p = t.n_p;
  row.bytes = t.bytes;
  return row;
}

void check_grid(const std::vector<std::size_t>& grid, const char* name,
                std::size_t max_value) {
  if (grid.empty()) {
    throw ConfigError(std::string("sweep grid '") + name + "' is empty");
  }
  for (auto v : grid) {
    if (v < 1 || v > max_value) {
      throw ConfigError(std::string("sweep grid '") + name + "' value " +
                        std::to_string(v) + " outside [1, " +
                        std::to_string(max_value) + "]");
    }
  }
}

std::vector<Group> make_groups(const SweepSpec& spec) {
  const std::size_t d = spec.database->dim();
  const std::size_t n = spec.database->size();
  std::vector<Group> groups;
  switch (spec.family) {
    case IndexFamily::kIvf:
      check_grid(spec.d_s_grid, "d_s", d);
      check_grid(spec.k_grid, "k", n);
      check_grid(spec.n_probe_grid, "n_p", n);
      for (auto dim : spec.d_s_grid) {
        for (auto k : spec.k_grid) {
          Group g;
          for (auto np : spec.n_probe_grid) g.tuples.push_back({dim, dim, k, np, 0});
          groups.push_back(std::move(g));
        }
      }
      break;
    case IndexFamily::kAdannsIvf:
      check_grid(spec.d_c_grid, "d_c", d);
      check_grid(spec.d_s_grid, "d_s", d);
      check_grid(spec.k_grid, "k", n);
      check_grid(spec.n_probe_grid, "n_p", n);
      for (auto dc : spec.d_c_grid) {
        for (auto k : spec.k_grid) {
          Group g;
          for (auto ds : spec.d_s_grid) {
            for (auto np : spec.n_probe_grid) g.tuples.push_back({dc, ds, k, np, 0});
          }
          groups.push_back(std::move(g));
        }
      }
      break;
    case IndexFamily::kAdannsIvfD:
      check_grid(spec.d_s_grid, "d_s", d);
      check_grid(spec.k_grid, "k", n);
      check_grid(spec.n_probe_grid, "n_p", n);
      for (auto k : spec.k_grid) {
        Group g;
        for (auto ds : spec.d_s_grid) {
          for (auto np : spec.n_probe_grid) g.tuples.push_back({d, ds, k, np, 0});
        }
        groups.push_back(std::move(g));
      }
      break;
    case IndexFamily::kOpqExhaustive:
      check_grid(spec.d_s_grid, "d_s", d);
      check_grid(spec.bytes_grid, "bytes", d);
      for (auto ds : spec.d_s_grid) {
        for (auto b : spec.bytes_grid) {
          groups.push_back({{{0, ds, 0, 0, b}}});
        }
      }
      break;
    case IndexFamily::kComposite:
      check_grid(spec.d_c_grid, "d_c", d);
      check_grid(spec.d_s_grid, "d_s", d);
      check_grid(spec.k_grid, "k", n);
      check_grid(spec.n_probe_grid, "n_p", n);
      check_grid(spec.bytes_grid, "bytes", d);
      if (spec.rerank_dim > d) throw ConfigError("rerank_dim exceeds data dimension");
      for (auto dc : spec.d_c_grid) {
        for (auto k : spec.k_grid) {
          for (auto ds : spec.d_s_grid) {
            for (auto b : spec.bytes_grid) {
              Group g;
              for (auto np : spec.n_probe_grid) g.tuples.push_back({dc, ds, k, np, b});
              groups.push_back(std::move(g));
            }
          }
        }
      }
      break;
  }
  return groups;
}

/// Dimension whose exact nearest neighbor defines 1-Recall@1 for a tuple.
std::size_t truth_dim(const SweepSpec& spec, const Tuple& t) {
  if (spec.family == IndexFamily::kComposite && spec.rerank_dim > 0) {
    return spec.rerank_dim;
  }
  return t.d_s;
}

struct Scores {
  double top1 = 0.0;
  double recall = 0.0;
};

template <typename SearchFn>
Scores score(const SweepSpec& spec, const std::vector<std::uint32_t>& exact,
             SearchFn&& search) {
  const EmbeddingSet& db = *spec.database;
  const EmbeddingSet& qs = *spec.queries;
  std::size_t correct = 0;
  std::size_t found = 0;
  for (std::size_t q = 0; q < qs.size(); ++q) {
    const std::vector<Neighbor> res = search(qs.row(q));
    if (res.empty()) continue;
    if (db.has_labels() && qs.has_labels() &&
        db.labels()[res.front().id] == qs.labels()[q]) {
      ++correct;
    }
    if (res.front().id == exact[q]) ++found;
  }
  const auto nq = static_cast<double>(std::max<std::size_t>(qs.size(), 1));
  return {static_cast<double>(correct) / nq, static_cast<double>(found) / nq};
}

double tuple_cost(const SweepSpec& spec, const Tuple& t) {
  const auto n = static_cast<double>(spec.database->size());
  switch (spec.family) {
    case IndexFamily::kIvf:
    case IndexFamily::kAdannsIvf:
    case IndexFamily::kAdannsIvfD:
      return ivf_query_cost({static_cast<double>(t.d_s), static_cast<double>(t.k),
                             static_cast<double>(t.n_p), n});
    case IndexFamily::kOpqExhaustive: {
      // rotation + lookup tables + one m-term sum per database code
      const auto ds = static_cast<double>(t.d_s);
      return ds * ds + ds * static_cast<double>(kPqCodewords) +
             n * static_cast<double>(t.bytes);
    }
    case IndexFamily::kComposite: {
      const auto ds = static_cast<double>(t.d_s);
      const auto k = static_cast<double>(t.k);
      double cost = static_cast<double>(t.d_c) * k + ds * ds +
                    ds * static_cast<double>(kPqCodewords) +
                    static_cast<double>(t.n_p) * n / k * static_cast<double>(t.bytes);
      if (spec.rerank_dim > 0) {
        const std::size_t shortlist =
            spec.shortlist == 0 ? kDefaultShortlistFactor : spec.shortlist;
        cost += static_cast<double>(shortlist * spec.rerank_dim);
      }
      return cost;
    }
  }
  return 0.0;
}

std::vector<FrontierRow> run_group(
    const SweepSpec& spec, const Group& group,
    const std::map<std::size_t, std::vector<std::uint32_t>>& exact,
    const std::set<std::string>& skip_keys) {
  std::vector<FrontierRow> rows;
  std::vector<Tuple> todo;
  for (const auto& t : group.tuples) {
    if (!skip_keys.contains(blank_row(spec, t).key())) todo.push_back(t);
  }
  if (todo.empty()) return rows;

  const Tuple& head = todo.front();
  KmeansConfig kcfg = spec.kmeans;
  kcfg.workers = 1;
  std::uint64_t seed = 0;
  switch (spec.family) {
    case IndexFamily::kOpqExhaustive:
      seed = tuple_seed(spec.seed, head.d_s, head.bytes);
      break;
    default:
      seed = tuple_seed(spec.seed, head.d_c, head.k);
      break;
  }
  kcfg.seed = seed;

  auto emit = [&](const Tuple& t, const Scores& s) {
    FrontierRow row = blank_row(spec, t);
    row.top1 = s.top1;
    row.recall_1_at_1 = s.recall;
    row.cost = tuple_cost(spec, t);
    row.seed = seed;
    rows.push_back(std::move(row));
  };
  auto fail = [&](const Tuple& t, const std::string& what) {
    FrontierRow row = blank_row(spec, t);
    row.seed = seed;
    row.ok = false;
    row.error = sanitize(what);
    rows.push_back(std::move(row));
  };

  // The build is shared by the whole group; a failing build fails every tuple.
  try {
    switch (spec.family) {
      case IndexFamily::kIvf: {
        const RigidIvf ivf = RigidIvf::build(*spec.database, head.d_c, head.k, kcfg);
        for (const auto& t : todo) {
          try {
            emit(t, score(spec, exact.at(truth_dim(spec, t)), [&](auto q) {
                   return ivf.search(q, t.n_p, 1);
                 }));
          } catch (const std::exception& e) {
            fail(t, e.what());
          }
        }
        break;
      }
      case IndexFamily::kAdannsIvf:
      case IndexFamily::kAdannsIvfD: {
        const IvfIndex ivf = IvfIndex::build(spec.database, head.d_c, head.k, kcfg);
        const bool adaptive_d = spec.family == IndexFamily::kAdannsIvfD;
        for (const auto& t : todo) {
          try {
            emit(t, score(spec, exact.at(truth_dim(spec, t)), [&](auto q) {
                   return adaptive_d
                              ? ivf.search_adaptive_d(q, t.d_s, t.n_p, 1)
                              : ivf.search(q, {.d_s = t.d_s, .n_probe = t.n_p, .topk = 1});
                 }));
          } catch (const std::exception& e) {
            fail(t, e.what());
          }
        }
        break;
      }
      case IndexFamily::kOpqExhaustive: {
        const EmbeddingView view = spec.database->prefix(head.d_s);
        const PqCodec codec = train_opq(view, head.bytes, spec.opq_iters, kcfg);
        const PqCodes codes = codec.encode(view);
        emit(head, score(spec, exact.at(truth_dim(spec, head)), [&](auto q) {
               return adc_search(codec, codes, q, 1);
             }));
        break;
      }
      case IndexFamily::kComposite: {
        const CompositeIndex index = CompositeIndex::build(
            spec.database, head.d_c, head.k,
            {.d_q = head.d_s, .m = head.bytes, .opq = true, .opq_iters = spec.opq_iters},
            spec.rerank_dim, kcfg);
        for (const auto& t : todo) {
          try {
            emit(t, score(spec, exact.at(truth_dim(spec, t)), [&](auto q) {
                   return index.search(q, {.d_s = t.d_s, .n_probe = t.n_p, .topk = 1},
                                       spec.shortlist)
                       .neighbors;
                 }));
          } catch (const std::exception& e) {
            fail(t, e.what());
          }
        }
        break;
      }
    }
  } catch (const std::exception& e) {
    rows.clear();
    for (const auto& t : todo) fail(t, e.what());
  }
  return rows;
}

}  // namespace

std::string_view family_name(IndexFamily f) {
  switch (f) {
    case IndexFamily::kIvf: return "ivf";
    case IndexFamily::kAdannsIvf: return "adanns-ivf";
    case IndexFamily::kAdannsIvfD: return "adanns-ivf-d";
    case IndexFamily::kOpqExhaustive: return "opq-exhaustive";
    case IndexFamily::kComposite: return "composite";
  }
  return "unknown";
}

IndexFamily parse_family(std::string_view name) {
  for (auto f : {IndexFamily::kIvf, IndexFamily::kAdannsIvf, IndexFamily::kAdannsIvfD,
                 IndexFamily::kOpqExhaustive, IndexFamily::kComposite}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown index family '" + std::string(name) + "'");
}

std::string FrontierRow::key() const {
  return family + "|" + std::to_string(d_c) + "|" + std::to_string(d_s) + "|" +
         std::to_string(k) + "|" + std::to_string(n_p) + "|" +
         std::to_string(bytes);
}

std::vector<std::size_t> dimension_ladder(std::size_t max_dim) {
  std::vector<std::size_t> out;
  for (std::size_t v = 8; v <= 2048 && v <= max_dim; v *= 2) out.push_back(v);
  return out;
}

std::uint64_t tuple_seed(std::uint64_t base, std::size_t dim, std::size_t count) {
  return mix_seed(mix_seed(base, dim), count);
}

std::vector<FrontierRow> run_sweep(
    const SweepSpec& spec, const std::function<void(const FrontierRow&)>& on_row,
    const std::set<std::string>& skip_keys) {
  if (!spec.database || spec.database->empty()) {
    throw ConfigError("sweep needs a non-empty database");
  }
  if (!spec.queries || spec.queries->empty()) {
    throw ConfigError("sweep needs a non-empty query set");
  }
  if (spec.queries->dim() < spec.database->dim()) {
    throw DimensionError("queries are narrower than the database");
  }
  const std::vector<Group> groups = make_groups(spec);
  const std::size_t workers = spec.workers == 0 ? default_workers() : spec.workers;

  // Exact rank-1 neighbors for every dimension that defines ground truth.
  std::map<std::size_t, std::vector<std::uint32_t>> exact;
  for (const auto& g : groups) {
    for (const auto& t : g.tuples) exact[truth_dim(spec, t)];
  }
  for (auto& [dim, ids] : exact) {
    const EmbeddingView base = spec.database->prefix(dim);
    ids.resize(spec.queries->size());
    parallel_for(ids.size(), workers, [&, dim = dim](std::size_t b, std::size_t e) {
      for (std::size_t q = b; q < e; ++q) {
        ids[q] = flat_search(base, spec.queries->row(q), 1).front().id;
      }
    });
  }

  std::vector<std::optional<std::vector<FrontierRow>>> done(groups.size());
  std::vector<FrontierRow> table;
  std::mutex mu;
  std::size_t next_emit = 0;
  std::atomic<std::size_t> next_group{0};

  auto flush_locked = [&] {
    while (next_emit < done.size() && done[next_emit].has_value()) {
      for (auto& row : *done[next_emit]) {
        if (on_row) on_row(row);
        table.push_back(std::move(row));
      }
      done[next_emit].reset();
      ++next_emit;
    }
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t g = next_group.fetch_add(1);
      if (g >= groups.size()) return;
      auto rows = run_group(spec, groups[g], exact, skip_keys);
      std::lock_guard lock(mu);
      done[g] = std::move(rows);
      flush_locked();
    }
  };

  const std::size_t threads = std::min(workers, groups.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return table;
}

std::vector<FrontierRow> pareto_frontier(std::span<const FrontierRow> rows) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].ok) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a].cost != rows[b].cost) return rows[a].cost < rows[b].cost;
    return rows[a].top1 > rows[b].top1;
  });

  std::vector<FrontierRow> out;
  bool have_prev = false;
  double best_prev = 0.0;  // best top1 among strictly cheaper rows
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    const double cost = rows[order[i]].cost;
    const double group_best = rows[order[i]].top1;
    std::vector<std::size_t> keep;
    for (; j < order.size() && rows[order[j]].cost == cost; ++j) {
      if (rows[order[j]].top1 == group_best &&
          !(have_prev && best_prev >= group_best)) {
        keep.push_back(order[j]);
      }
    }
    std::sort(keep.begin(), keep.end());
    for (auto idx : keep) out.push_back(rows[idx]);
    if (!have_prev || group_best > best_prev) best_prev = group_best;
    have_prev = true;
    i = j;
  }
  return out;
}

bool weakly_dominates(std::span<const FrontierRow> rows,
                      std::span<const FrontierRow> other) {
  for (const auto& r : other) {
    if (!r.ok) continue;
    const bool covered = std::any_of(rows.begin(), rows.end(), [&](const FrontierRow& a) {
      return a.ok && a.cost <= r.cost && a.top1 >= r.top1;
    });
    if (!covered) return false;
  }
  return true;
}

std::string format_frontier_row(const FrontierRow& row) {
  std::string s = row.family;
  for (std::size_t v : {row.d_c, row.d_s, row.k, row.n_p, row.bytes}) {
    s += ',' + std::to_string(v);
  }
  s += ',' + format_double(row.top1);
  s += ',' + format_double(row.recall_1_at_1);
  s += ',' + format_double(row.cost);
  s += ',' + std::to_string(row.seed);
  s += row.ok ? ",ok," : ",error,";
  s += sanitize(row.error);
  return s;
}

FrontierRow parse_frontier_row(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    f.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (f.size() != 12) {
    throw FormatError("frontier CSV row has " + std::to_string(f.size()) +
                          " fields, expected 12",
                      0);
  }
  auto to_size = [](std::string_view v) {
    std::size_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
      throw FormatError("bad integer '" + std::string(v) + "' in frontier CSV", 0);
    }
    return out;
  };
  auto to_double = [](std::string_view v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
      throw FormatError("bad number '" + std::string(v) + "' in frontier CSV", 0);
    }
    return out;
  };
  FrontierRow row;
  row.family = std::string(f[0]);
  row.d_c = to_size(f[1]);
  row.d_s = to_size(f[2]);
  row.k = to_size(f[3]);
  row.n_p = to_size(f[4]);
  row.bytes = to_size(f[5]);
  row.top1 = to_double(f[6]);
  row.recall_1_at_1 = to_double(f[7]);
  row.cost = to_double(f[8]);
  std::uint64_t seed = 0;
  const auto res = std::from_chars(f[9].data(), f[9].data() + f[9].size(), seed);
  if (res.ec != std::errc{}) throw FormatError("bad seed in frontier CSV", 0);
  row.seed = seed;
  row.ok = f[10] == "ok";
  row.error = std::string(f[11]);
  return row;
}

std::vector<FrontierRow> read_frontier_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::vector<FrontierRow> rows;
  if (!std::getline(in, line)) return rows;
  if (line != kFrontierCsvHeader) {
    throw FormatError("frontier CSV header does not match", 0);
  }
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_frontier_row(line));
  }
  return rows;
}

std::string sweep_manifest_json(const SweepSpec& spec) {
  nlohmann::ordered_json j;
  j["tool"] = "adanns";
  j["version"] = ADANNS_VERSION;
  j["family"] = family_name(spec.family);
  j["seed"] = spec.seed;
  j["database"] = {{"n", spec.database ? spec.database->size() : 0},
                   {"d", spec.database ? spec.database->dim() : 0}};
  j["queries"] = {{"n", spec.queries ? spec.queries->size() : 0}};
  j["grids"] = {{"d_c", spec.d_c_grid},
                {"d_s", spec.d_s_grid},
                {"k", spec.k_grid},
                {"n_p", spec.n_probe_grid},
                {"bytes", spec.bytes_grid}};
  j["rerank_dim"] = spec.rerank_dim;
  j["shortlist"] = spec.shortlist;
  j["opq_iters"] = spec.opq_iters;
  j["kmeans"] = {{"max_iters", spec.kmeans.max_iters},
                 {"tol", spec.kmeans.tol},
                 {"init", spec.kmeans.init == KmeansInit::kPlusPlus ? "kmeans++"
                                                                     : "random-subset"},
                 {"sample_fraction", spec.kmeans.sample_fraction}};
  j["workers"] = spec.workers;
  j["columns"] = std::string(kFrontierCsvHeader);
  return j.dump(2);
}

}  // namespace adanns
