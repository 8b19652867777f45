#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adanns/binary_io.hpp"
#include "adanns/composite.hpp"
#include "adanns/embedding.hpp"
#include "adanns/error.hpp"
#include "adanns/ivf.hpp"
#include "adanns/metrics.hpp"
#include "adanns/parallel.hpp"
#include "adanns/sweep.hpp"

namespace adanns::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::uint64_t seed = 42;
  std::size_t workers = 0;
  int verbosity = 0;
};

struct GenOptions {
  SyntheticMrSpec spec;
  std::string out_dir;
};

struct BuildOptions {
  std::string base;
  std::string out;
  std::string family = "ivf";
  std::size_t dc = 0;
  std::size_t k = 0;
  std::size_t bytes = 8;
  std::size_t dq = 0;
  std::size_t rerank_dim = 0;
  std::size_t opq_iters = 20;
  bool no_opq = false;
  std::size_t max_iters = 25;
  double sample_fraction = 1.0;
  bool cosine = false;
};

struct SearchOptions {
  std::string index;
  std::string base;
  std::string queries;
  std::string out_ids;
  std::string out_dist;
  std::size_t ds = 0;
  std::size_t nprobe = 1;
  std::size_t topk = 10;
  std::size_t shortlist = 0;
  std::size_t dshortlist = 0;
  bool adaptive_d = false;
  bool cosine = false;
};

struct EvalOptions {
  std::string results;
  std::string query_labels;
  std::string base_labels;
  std::string ground_truth;
  std::string out;
  std::string per_query;
  std::vector<std::size_t> ks{1, 10};
  std::size_t num_classes = 0;
};

struct SweepOptions {
  std::string base;
  std::string queries;
  std::string base_labels;
  std::string query_labels;
  std::string out;
  std::string manifest;
  std::string family = "adanns-ivf";
  std::vector<std::size_t> dc_grid;
  std::vector<std::size_t> ds_grid;
  std::vector<std::size_t> k_grid;
  std::vector<std::size_t> nprobe_grid{1};
  std::vector<std::size_t> bytes_grid;
  std::size_t rerank_dim = 0;
  std::size_t shortlist = 0;
  std::size_t opq_iters = 10;
  std::size_t max_iters = 25;
  bool resume = false;
};

int report(std::ostream& err, ExitCode code, const std::string& kind,
           const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["exit_code"] = static_cast<int>(code);
  j["message"] = message;
  err << j.dump() << '\n';
  return code;
}

void require_inputs(std::initializer_list<const std::string*> paths) {
  for (const auto* p : paths) {
    if (p->empty()) continue;
    if (!fs::exists(*p)) throw IoError("input file '" + *p + "' does not exist");
  }
}

/// Refuses outputs that would overwrite an input.
void require_distinct(std::initializer_list<const std::string*> inputs,
                      std::initializer_list<const std::string*> outputs) {
  for (const auto* o : outputs) {
    if (o->empty()) continue;
    for (const auto* i : inputs) {
      if (i->empty()) continue;
      std::error_code ec;
      if (*o == *i || (fs::exists(*o) && fs::equivalent(*o, *i, ec))) {
        throw ConfigError("output '" + *o + "' would overwrite an input");
      }
    }
  }
}

std::shared_ptr<const EmbeddingSet> load_set(const std::string& path,
                                             bool cosine) {
  EmbeddingSet set = read_fvecs(path);
  if (cosine) set = set.normalized();
  return std::make_shared<const EmbeddingSet>(std::move(set));
}

KmeansConfig kmeans_config(const CommonOptions& c, std::size_t max_iters,
                           double sample_fraction = 1.0) {
  KmeansConfig k;
  k.seed = c.seed;
  k.max_iters = max_iters;
  k.sample_fraction = sample_fraction;
  k.workers = c.workers;
  return k;
}

void check_range(std::size_t v, std::size_t lo, std::size_t hi,
                 const char* name) {
  if (v < lo || v > hi) {
    throw ConfigError(std::string(name) + "=" + std::to_string(v) +
                      " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
}

// ---------------------------------------------------------------------------

void cmd_gen(const GenOptions& o, const CommonOptions& c, std::ostream& out) {
  SyntheticMrSpec spec = o.spec;
  spec.seed = c.seed;
  const SyntheticData data = generate_synthetic_mr(spec);
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  write_fvecs(data.database, dir / "base.fvecs");
  write_fvecs(data.queries, dir / "queries.fvecs");
  write_labels(data.database.labels(), dir / "base_labels.ivecs");
  write_labels(data.queries.labels(), dir / "query_labels.ivecs");
  if (c.verbosity > 0) {
    out << "generated " << spec.n << " database and " << spec.num_queries
        << " query vectors (d=" << spec.d << ") in " << o.out_dir << '\n';
  }
}

void cmd_build(const BuildOptions& o, const CommonOptions& c, std::ostream& out) {
  require_inputs({&o.base});
  require_distinct({&o.base}, {&o.out});
  const IndexFamily family = parse_family(o.family);
  if (family != IndexFamily::kIvf && family != IndexFamily::kComposite) {
    throw ConfigError("build supports --family ivf or composite");
  }
  const auto base = load_set(o.base, o.cosine);
  const std::size_t d = base->dim();
  const std::size_t dc = o.dc == 0 ? d : o.dc;
  check_range(dc, 1, d, "dc");
  check_range(o.k, 1, base->size(), "k");
  if (!(o.sample_fraction > 0.0 && o.sample_fraction <= 1.0)) {
    throw ConfigError("sample-fraction must lie in (0, 1]");
  }
  const KmeansConfig kcfg = kmeans_config(c, o.max_iters, o.sample_fraction);

  if (family == IndexFamily::kIvf) {
    IvfIndex::build(base, dc, o.k, kcfg).save(o.out);
  } else {
    const std::size_t dq = o.dq == 0 ? dc : o.dq;
    check_range(dq, 1, d, "dq");
    check_range(o.rerank_dim, 0, d, "rerank-dim");
    if (o.bytes < 1 || dq % o.bytes != 0) {
      throw ConfigError("bytes=" + std::to_string(o.bytes) +
                        " must divide dq=" + std::to_string(dq));
    }
    CompositeIndex::build(base, dc, o.k,
                          {.d_q = dq, .m = o.bytes, .opq = !o.no_opq,
                           .opq_iters = o.opq_iters},
                          o.rerank_dim, kcfg)
        .save(o.out);
  }
  if (c.verbosity > 0) out << "wrote " << o.family << " index to " << o.out << '\n';
}

void cmd_search(const SearchOptions& o, const CommonOptions& c, std::ostream& out) {
  require_inputs({&o.index, &o.base, &o.queries});
  require_distinct({&o.index, &o.base, &o.queries}, {&o.out_ids, &o.out_dist});
  if (o.topk < 1) throw ConfigError("topk must be >= 1");
  const auto base = load_set(o.base, o.cosine);
  const auto queries = load_set(o.queries, o.cosine);
  if (queries->dim() < base->dim()) {
    throw ConfigError("queries are narrower than the database");
  }

  const auto bytes = read_file_bytes(o.index);
  ByteReader in(bytes);
  std::function<std::vector<Neighbor>(std::span<const float>)> search;
  std::optional<IvfIndex> ivf;
  std::optional<CompositeIndex> composite;
  if (in.peek_tag("ADNSCMP1")) {
    composite = CompositeIndex::read(in, base);
    check_range(o.nprobe, 1, composite->ivf().k(), "nprobe");
    if (composite->rerank_dim() > 0 && o.shortlist != 0 && o.shortlist < o.topk) {
      throw ConfigError("shortlist must be >= topk when re-ranking");
    }
    const SearchParams p{.d_s = composite->codec().d_q(), .n_probe = o.nprobe,
                         .topk = o.topk, .d_shortlist = o.dshortlist};
    search = [&, p](std::span<const float> q) {
      return composite->search(q, p, o.shortlist).neighbors;
    };
  } else {
    ivf = IvfIndex::read(in, base);
    check_range(o.nprobe, 1, ivf->k(), "nprobe");
    const std::size_t ds = o.ds == 0 ? ivf->d_c() : o.ds;
    check_range(ds, 1, base->dim(), "ds");
    if (o.adaptive_d) {
      if (ivf->d_c() != base->dim()) {
        throw ConfigError("--adaptive-d needs an index built at the full dimension");
      }
      search = [&, ds](std::span<const float> q) {
        return ivf->search_adaptive_d(q, ds, o.nprobe, o.topk);
      };
    } else {
      if (o.dshortlist != 0) check_range(o.dshortlist, 1, ivf->d_c(), "dshortlist");
      const SearchParams p{.d_s = ds, .n_probe = o.nprobe, .topk = o.topk,
                           .d_shortlist = o.dshortlist};
      search = [&, p](std::span<const float> q) { return ivf->search(q, p); };
    }
  }
  if (!in.at_end()) throw FormatError("trailing bytes after index", in.offset());

  const std::size_t nq = queries->size();
  std::vector<std::vector<std::int32_t>> ids(nq, std::vector<std::int32_t>(o.topk, -1));
  std::vector<float> dists(nq * o.topk, std::numeric_limits<float>::infinity());
  std::size_t underfilled = 0;
  parallel_for(nq, c.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) {
      const auto res = search(queries->row(q));
      for (std::size_t r = 0; r < res.size(); ++r) {
        ids[q][r] = static_cast<std::int32_t>(res[r].id);
        dists[q * o.topk + r] = res[r].distance;
      }
    }
  });
  for (const auto& row : ids) underfilled += row.back() < 0 ? 1 : 0;

  write_ivecs(ids, o.out_ids);
  if (!o.out_dist.empty()) {
    const EmbeddingSet d(nq, o.topk, std::move(dists));
    write_fvecs(d, o.out_dist);
  }
  if (c.verbosity > 0 || underfilled > 0) {
    out << "searched " << nq << " queries";
    if (underfilled > 0) out << " (" << underfilled << " underfilled)";
    out << '\n';
  }
}

void cmd_eval(const EvalOptions& o, const CommonOptions& c, std::ostream& out) {
  require_inputs({&o.results, &o.query_labels, &o.base_labels, &o.ground_truth});
  require_distinct({&o.results, &o.query_labels, &o.base_labels, &o.ground_truth},
                   {&o.out, &o.per_query});
  EvalReport report;
  report.query_labels = read_labels(o.query_labels);
  report.database_labels = read_labels(o.base_labels);
  report.num_classes = o.num_classes;
  auto to_ids = [&](const std::vector<std::vector<std::int32_t>>& rows) {
    std::vector<std::vector<std::uint32_t>> lists;
    lists.reserve(rows.size());
    for (const auto& r : rows) {
      std::vector<std::uint32_t> ids;
      for (auto v : r) {
        if (v < 0) continue;
        if (static_cast<std::size_t>(v) >= report.database_labels.size()) {
          throw FormatError("result id " + std::to_string(v) +
                                " exceeds the database size",
                            0);
        }
        ids.push_back(static_cast<std::uint32_t>(v));
      }
      lists.push_back(std::move(ids));
    }
    return lists;
  };
  report.retrieved = to_ids(read_ivecs(o.results));
  if (!o.ground_truth.empty()) report.ground_truth = to_ids(read_ivecs(o.ground_truth));
  if (report.retrieved.size() != report.query_labels.size()) {
    throw ConfigError("results hold " + std::to_string(report.retrieved.size()) +
                      " queries but query labels hold " +
                      std::to_string(report.query_labels.size()));
  }
  evaluate(report, o.ks);
  write_metrics_csv(report, o.out);
  if (!o.per_query.empty()) write_per_query_jsonl(report, o.per_query);
  if (c.verbosity > 0) {
    for (const auto& [name, value] : report.metrics) out << name << ' ' << value << '\n';
  }
}

void cmd_sweep(const SweepOptions& o, const CommonOptions& c, std::ostream& out) {
  require_inputs({&o.base, &o.queries, &o.base_labels, &o.query_labels});
  require_distinct({&o.base, &o.queries, &o.base_labels, &o.query_labels},
                   {&o.out, &o.manifest});
  SweepSpec spec;
  spec.family = parse_family(o.family);
  EmbeddingSet base = read_fvecs(o.base);
  EmbeddingSet queries = read_fvecs(o.queries);
  if (!o.base_labels.empty()) base = base.with_labels(read_labels(o.base_labels));
  if (!o.query_labels.empty()) queries = queries.with_labels(read_labels(o.query_labels));
  const std::size_t d = base.dim();
  const std::size_t n = base.size();
  spec.database = std::make_shared<const EmbeddingSet>(std::move(base));
  spec.queries = std::make_shared<const EmbeddingSet>(std::move(queries));

  auto ladder = dimension_ladder(d);
  if (ladder.empty()) ladder = {d};
  spec.d_c_grid = o.dc_grid.empty() ? ladder : o.dc_grid;
  spec.d_s_grid = o.ds_grid.empty() ? ladder : o.ds_grid;
  if (o.k_grid.empty()) {
    for (std::size_t k = 8; k <= 2048 && k <= n; k *= 2) spec.k_grid.push_back(k);
  } else {
    spec.k_grid = o.k_grid;
  }
  spec.n_probe_grid = o.nprobe_grid;
  spec.bytes_grid = o.bytes_grid.empty() ? std::vector<std::size_t>{8} : o.bytes_grid;
  spec.rerank_dim = o.rerank_dim;
  spec.shortlist = o.shortlist;
  spec.opq_iters = o.opq_iters;
  spec.kmeans.max_iters = o.max_iters;
  spec.seed = c.seed;
  spec.workers = c.workers;

  std::set<std::string> done;
  const bool append = o.resume && fs::exists(o.out);
  if (append) {
    for (const auto& row : read_frontier_csv(o.out)) {
      if (row.ok) done.insert(row.key());
    }
  }
  std::ofstream csv(o.out, append ? std::ios::app : std::ios::trunc);
  if (!csv) throw IoError("cannot open '" + o.out + "' for writing");
  if (!append) csv << kFrontierCsvHeader << '\n';

  std::size_t rows = 0;
  run_sweep(spec, [&](const FrontierRow& row) {
    csv << format_frontier_row(row) << '\n';
    csv.flush();
    ++rows;
  }, done);
  if (!csv) throw IoError("write failed for '" + o.out + "'");

  if (!o.manifest.empty()) {
    std::ofstream m(o.manifest, std::ios::trunc);
    if (!m) throw IoError("cannot open '" + o.manifest + "' for writing");
    m << sweep_manifest_json(spec) << '\n';
  }
  if (c.verbosity > 0) out << "evaluated " << rows << " configurations\n";
}

// ---------------------------------------------------------------------------
// Config files: "key = value" lines, '#' comments. Keys are long flag names.
// They are spliced in ahead of the command-line flags, and every option keeps
// its last value, so explicit flags win over the file, which wins over
// ADANNS_SEED, which wins over built-in defaults.

std::vector<std::string> config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty() || key == "config") {
      throw ConfigError("config line " + std::to_string(lineno) + " has an invalid key");
    }
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

/// Extracts --config (both "--config path" and "--config=path") from args.
std::vector<std::string> expand_config(const std::vector<std::string>& args,
                                       const CLI::App& app) {
  std::vector<std::string> rest;
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a path");
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config.empty()) return rest;
  std::vector<std::string> file_args = config_args(config);
  const CLI::App* sub = nullptr;
  if (!rest.empty()) {
    for (const auto* cand : app.get_subcommands({})) {
      if (cand->get_name() == rest.front()) sub = cand;
    }
  }
  if (sub == nullptr) throw CLI::ArgumentMismatch("--config needs a subcommand");
  for (const auto& a : file_args) {
    const std::string key = a.substr(0, a.find('='));
    if (sub->get_option_no_throw(key) == nullptr) {
      throw ConfigError("unknown config key '" + key.substr(2) + "' for " +
                        sub->get_name());
    }
  }
  // Subcommand name stays first.
  std::vector<std::string> merged;
  if (!rest.empty()) merged.push_back(rest.front());
  merged.insert(merged.end(), file_args.begin(), file_args.end());
  if (rest.size() > 1) merged.insert(merged.end(), rest.begin() + 1, rest.end());
  return merged;
}

void add_common(CLI::App* sub, CommonOptions& c) {
  sub->add_option("--seed", c.seed, "RNG seed")->envname("ADANNS_SEED");
  sub->add_option("--workers", c.workers, "worker threads (0 = all cores)");
  sub->add_flag("-v,--verbose", c.verbosity, "print progress");
  sub->add_option("--config", "key = value config file (flags override it)");
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Adaptive approximate nearest-neighbor search toolkit", "adanns"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  CommonOptions c_gen, c_build, c_search, c_eval, c_sweep;
  GenOptions gen;
  BuildOptions build;
  SearchOptions search;
  EvalOptions eval;
  SweepOptions sweep;

  auto* g = app.add_subcommand("gen", "generate a synthetic nested-embedding dataset");
  add_common(g, c_gen);
  g->add_option("--out-dir", gen.out_dir, "output directory")->required();
  g->add_option("--n", gen.spec.n, "database size");
  g->add_option("--queries", gen.spec.num_queries, "query count");
  g->add_option("--d", gen.spec.d, "dimension");
  g->add_option("--classes", gen.spec.num_classes, "class count");
  g->add_option("--alpha", gen.spec.variance_decay, "per-coordinate decay exponent");
  g->add_option("--sep", gen.spec.class_sep, "expected distance between class means");
  g->add_option("--noise-decay", gen.spec.noise_decay,
                "noise decay exponent (default: --alpha)");

  auto* b = app.add_subcommand("build", "build and save an index");
  add_common(b, c_build);
  b->add_option("--base", build.base, "database fvecs")->required();
  b->add_option("--out", build.out, "index output path")->required();
  b->add_option("--family", build.family, "ivf | composite");
  b->add_option("--dc", build.dc, "cluster construction dimension (default: full)");
  b->add_option("--k", build.k, "cluster count")->required();
  b->add_option("--bytes", build.bytes, "PQ code bytes (composite)");
  b->add_option("--dq", build.dq, "quantized prefix dimension (composite; default dc)");
  b->add_option("--rerank-dim", build.rerank_dim, "re-rank dimension, 0 = off (composite)");
  b->add_option("--opq-iters", build.opq_iters, "OPQ alternations (composite)");
  b->add_flag("--no-opq", build.no_opq, "plain PQ instead of OPQ (composite)");
  b->add_option("--max-iters", build.max_iters, "k-means iteration cap");
  b->add_option("--sample-fraction", build.sample_fraction, "k-means training fraction");
  b->add_flag("--cosine", build.cosine, "normalize rows (cosine ranking)");

  auto* s = app.add_subcommand("search", "search a saved index");
  add_common(s, c_search);
  s->add_option("--index", search.index, "index path")->required();
  s->add_option("--base", search.base, "database fvecs the index was built on")->required();
  s->add_option("--queries", search.queries, "query fvecs")->required();
  s->add_option("--out-ids", search.out_ids, "ranked ids (ivecs)")->required();
  s->add_option("--out-dist", search.out_dist, "ranked distances (fvecs)");
  s->add_option("--ds", search.ds, "scan dimension (default: d_c)");
  s->add_option("--nprobe", search.nprobe, "probed clusters");
  s->add_option("--topk", search.topk, "neighbors per query");
  s->add_option("--shortlist", search.shortlist, "re-rank shortlist (composite)");
  s->add_option("--dshortlist", search.dshortlist, "centroid ranking prefix (default: d_c)");
  s->add_flag("--adaptive-d", search.adaptive_d, "use --ds for probing and scanning");
  s->add_flag("--cosine", search.cosine, "normalize rows (cosine ranking)");

  auto* e = app.add_subcommand("eval", "score search results");
  add_common(e, c_eval);
  e->add_option("--results", eval.results, "ranked ids (ivecs)")->required();
  e->add_option("--query-labels", eval.query_labels, "query labels (ivecs)")->required();
  e->add_option("--base-labels", eval.base_labels, "database labels (ivecs)")->required();
  e->add_option("--gt", eval.ground_truth, "exact neighbor ids (ivecs)");
  e->add_option("--out", eval.out, "metrics CSV")->required();
  e->add_option("--per-query", eval.per_query, "per-query JSON lines");
  e->add_option("--ks", eval.ks, "cutoffs")->delimiter(',');
  e->add_option("--num-classes", eval.num_classes, "class count (default: distinct labels)");

  auto* w = app.add_subcommand("sweep", "grid sweep producing a frontier table");
  add_common(w, c_sweep);
  w->add_option("--base", sweep.base, "database fvecs")->required();
  w->add_option("--queries", sweep.queries, "query fvecs")->required();
  w->add_option("--base-labels", sweep.base_labels, "database labels (ivecs)");
  w->add_option("--query-labels", sweep.query_labels, "query labels (ivecs)");
  w->add_option("--out", sweep.out, "frontier CSV")->required();
  w->add_option("--manifest", sweep.manifest, "run manifest JSON");
  w->add_option("--family", sweep.family,
                "ivf | adanns-ivf | adanns-ivf-d | opq-exhaustive | composite");
  w->add_option("--dc-grid", sweep.dc_grid, "d_c values")->delimiter(',');
  w->add_option("--ds-grid", sweep.ds_grid, "d_s values")->delimiter(',');
  w->add_option("--k-grid", sweep.k_grid, "cluster counts")->delimiter(',');
  w->add_option("--nprobe-grid", sweep.nprobe_grid, "probe counts")->delimiter(',');
  w->add_option("--bytes-grid", sweep.bytes_grid, "code sizes")->delimiter(',');
  w->add_option("--rerank-dim", sweep.rerank_dim, "composite re-rank dimension");
  w->add_option("--shortlist", sweep.shortlist, "composite shortlist");
  w->add_option("--opq-iters", sweep.opq_iters, "OPQ alternations");
  w->add_option("--max-iters", sweep.max_iters, "k-means iteration cap");
  w->add_flag("--resume", sweep.resume, "skip tuples already in --out");

  try {
    std::vector<std::string> args = expand_config(raw_args, app);
    std::vector<std::string> storage{"adanns"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : storage) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());

    if (g->parsed()) cmd_gen(gen, c_gen, out);
    if (b->parsed()) cmd_build(build, c_build, out);
    if (s->parsed()) cmd_search(search, c_search, out);
    if (e->parsed()) cmd_eval(eval, c_eval, out);
    if (w->parsed()) cmd_sweep(sweep, c_sweep, out);
    return kOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ConversionError& ex) {
    return report(err, kConfig, "config", ex.what());
  } catch (const CLI::ValidationError& ex) {
    return report(err, kConfig, "config", ex.what());
  } catch (const CLI::ParseError& ex) {
    return report(err, kUsage, "usage", ex.what());
  } catch (const IoError& ex) {
    return report(err, kIo, "io", ex.what());
  } catch (const FormatError& ex) {
    return report(err, kIo, "format", ex.what());
  } catch (const ConfigError& ex) {
    return report(err, kConfig, "config", ex.what());
  } catch (const DimensionError& ex) {
    return report(err, kConfig, "config", ex.what());
  } catch (const InsufficientDataError& ex) {
    return report(err, kConfig, "config", ex.what());
  } catch (const fs::filesystem_error& ex) {
    return report(err, kIo, "io", ex.what());
  } catch (const std::exception& ex) {
    return report(err, kInternal, "internal", ex.what());
  }
}

}  // namespace adanns::cli
