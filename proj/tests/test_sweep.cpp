#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "adanns/error.hpp"
#include "adanns/ivf.hpp"
#include "adanns/metrics.hpp"
#include "adanns/sweep.hpp"
#include "support.hpp"

namespace adanns {
namespace {

struct Fixture {
  std::shared_ptr<const EmbeddingSet> db;
  std::shared_ptr<const EmbeddingSet> qs;
};

Fixture fixture(std::size_t n = 1200, std::size_t nq = 80, std::size_t d = 64) {
  SyntheticMrSpec s;
  s.n = n;
  s.num_queries = nq;
  s.d = d;
  s.num_classes = 6;
  s.class_sep = 1.0;
  s.seed = 5;
  auto data = generate_synthetic_mr(s);
  return {test::share(std::move(data.database)), test::share(std::move(data.queries))};
}

SweepSpec base_spec(const Fixture& f, IndexFamily family) {
  SweepSpec s;
  s.database = f.db;
  s.queries = f.qs;
  s.family = family;
  s.kmeans.max_iters = 8;
  s.seed = 3;
  return s;
}

// A single-tuple sweep equals building and evaluating that index by hand.
TEST(Sweep, SingleTupleMatchesDirectBuildAndEvaluation) {
  const auto f = fixture();
  SweepSpec s = base_spec(f, IndexFamily::kAdannsIvf);
  s.d_c_grid = {16};
  s.d_s_grid = {32};
  s.k_grid = {12};
  s.n_probe_grid = {3};
  const auto rows = run_sweep(s);
  ASSERT_EQ(rows.size(), 1u);

  KmeansConfig kc = s.kmeans;
  kc.workers = 1;
  kc.seed = tuple_seed(s.seed, 16, 12);
  const IvfIndex ivf = IvfIndex::build(f.db, 16, 12, kc);
  std::size_t correct = 0;
  std::size_t exact = 0;
  for (std::size_t q = 0; q < f.qs->size(); ++q) {
    const auto res = ivf.search(f.qs->row(q), {.d_s = 32, .n_probe = 3, .topk = 1});
    ASSERT_FALSE(res.empty());
    correct += f.db->labels()[res[0].id] == f.qs->labels()[q];
    exact += res[0].id == test::brute_force(*f.db, f.qs->row(q), 32, 1)[0].id;
  }
  const double nq = static_cast<double>(f.qs->size());
  EXPECT_TRUE(rows[0].ok);
  EXPECT_DOUBLE_EQ(rows[0].top1, correct / nq);
  EXPECT_DOUBLE_EQ(rows[0].recall_1_at_1, exact / nq);
  EXPECT_DOUBLE_EQ(rows[0].cost, ivf_query_cost({32, 12, 3, 1200}));
  EXPECT_EQ(rows[0].seed, kc.seed);
}

// Decoupled rows with d_c == d_s coincide with the conventional IVF rows.
TEST(Sweep, DecoupledDiagonalEqualsConventionalIvf) {
  const auto f = fixture();
  SweepSpec rigid = base_spec(f, IndexFamily::kIvf);
  rigid.d_s_grid = {8, 16, 32, 64};
  rigid.k_grid = {16, 64};
  rigid.n_probe_grid = {1, 4};
  SweepSpec adaptive = rigid;
  adaptive.family = IndexFamily::kAdannsIvf;
  adaptive.d_c_grid = rigid.d_s_grid;
  const auto r = run_sweep(rigid);
  const auto a = run_sweep(adaptive);
  ASSERT_EQ(r.size(), 16u);
  ASSERT_EQ(a.size(), 64u);
  std::size_t matched = 0;
  for (const auto& row : r) {
    for (const auto& other : a) {
      if (other.d_c == other.d_s && other.d_c == row.d_c && other.k == row.k &&
          other.n_p == row.n_p) {
        EXPECT_DOUBLE_EQ(other.top1, row.top1);
        EXPECT_DOUBLE_EQ(other.recall_1_at_1, row.recall_1_at_1);
        EXPECT_DOUBLE_EQ(other.cost, row.cost);
        ++matched;
      }
    }
  }
  EXPECT_EQ(matched, 16u);
  EXPECT_TRUE(weakly_dominates(a, r));
}

TEST(Sweep, DeterministicAndIndependentOfWorkerCount) {
  const auto f = fixture(800, 40, 32);
  SweepSpec s = base_spec(f, IndexFamily::kComposite);
  s.d_c_grid = {8, 16};
  s.d_s_grid = {16};
  s.k_grid = {8};
  s.n_probe_grid = {1, 2};
  s.bytes_grid = {4};
  s.rerank_dim = 32;
  s.opq_iters = 2;
  const auto a = run_sweep(s);
  s.workers = 3;
  std::vector<FrontierRow> streamed;
  const auto b = run_sweep(s, [&](const FrontierRow& r) { streamed.push_back(r); });
  EXPECT_EQ(a, b);
  EXPECT_EQ(streamed, b);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0].d_c, 8u);
  EXPECT_EQ(a[3].d_c, 16u);
}

TEST(Sweep, OtherFamiliesProduceOneRowPerTuple) {
  const auto f = fixture(600, 30, 32);
  SweepSpec opq = base_spec(f, IndexFamily::kOpqExhaustive);
  opq.d_s_grid = {8, 32};
  opq.bytes_grid = {2, 4};
  opq.opq_iters = 2;
  const auto o = run_sweep(opq);
  ASSERT_EQ(o.size(), 4u);
  for (const auto& r : o) {
    EXPECT_TRUE(r.ok) << r.error;
    EXPECT_DOUBLE_EQ(r.cost, double(r.d_s * r.d_s + r.d_s * 256 + 600 * r.bytes));
  }

  SweepSpec dd = base_spec(f, IndexFamily::kAdannsIvfD);
  dd.d_s_grid = {8, 32};
  dd.k_grid = {6};
  dd.n_probe_grid = {6};
  const auto d = run_sweep(dd);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].d_c, 32u);
  // Probing every list at the full prefix is exact.
  EXPECT_DOUBLE_EQ(d[1].recall_1_at_1, 1.0);
}

TEST(Sweep, SkipKeysResumeWithoutRecomputation) {
  const auto f = fixture(600, 30, 32);
  SweepSpec s = base_spec(f, IndexFamily::kAdannsIvf);
  s.d_c_grid = {8, 16};
  s.d_s_grid = {16, 32};
  s.k_grid = {8};
  s.n_probe_grid = {2};
  const auto full = run_sweep(s);
  ASSERT_EQ(full.size(), 4u);
  const std::set<std::string> skip{full[0].key(), full[3].key()};
  const auto rest = run_sweep(s, {}, skip);
  ASSERT_EQ(rest.size(), 2u);
  EXPECT_EQ(rest[0], full[1]);
  EXPECT_EQ(rest[1], full[2]);
}

TEST(Sweep, InvalidGridsAndInputsAreRejected) {
  const auto f = fixture(300, 10, 16);
  SweepSpec s = base_spec(f, IndexFamily::kAdannsIvf);
  s.d_c_grid = {8};
  s.d_s_grid = {32};
  s.k_grid = {4};
  EXPECT_THROW(run_sweep(s), ConfigError);
  s.d_s_grid = {};
  EXPECT_THROW(run_sweep(s), ConfigError);
  s.d_s_grid = {8};
  s.k_grid = {301};
  EXPECT_THROW(run_sweep(s), ConfigError);
  s.k_grid = {4};
  s.queries = nullptr;
  EXPECT_THROW(run_sweep(s), ConfigError);
  s.queries = std::make_shared<const EmbeddingSet>(test::random_set(3, 8, 1));
  EXPECT_THROW(run_sweep(s), DimensionError);
}

// A tuple that fails at search time is recorded rather than aborting the run.
TEST(Sweep, FailingTuplesBecomeErrorRows) {
  const auto f = fixture(300, 10, 16);
  SweepSpec s = base_spec(f, IndexFamily::kAdannsIvf);
  s.d_c_grid = {8};
  s.d_s_grid = {8};
  s.k_grid = {4};
  s.n_probe_grid = {2, 5};
  const auto rows = run_sweep(s);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].ok);
  EXPECT_FALSE(rows[1].ok);
  EXPECT_FALSE(rows[1].error.empty());
  EXPECT_EQ(rows[1].error.find(','), std::string::npos);
  EXPECT_EQ(pareto_frontier(rows).size(), 1u);
}

// ---------------------------------------------------------------------------

FrontierRow row(double cost, double top1, bool ok = true) {
  FrontierRow r;
  r.family = "x";
  r.cost = cost;
  r.top1 = top1;
  r.ok = ok;
  return r;
}

bool dominated(const FrontierRow& r, const std::vector<FrontierRow>& all) {
  return std::any_of(all.begin(), all.end(), [&](const FrontierRow& o) {
    return o.ok && o.cost <= r.cost && o.top1 >= r.top1 &&
           (o.cost < r.cost || o.top1 > r.top1);
  });
}

TEST(Pareto, MatchesQuadraticOracleOnRandomTables) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<FrontierRow> rows;
    std::uniform_int_distribution<int> c(1, 40);
    std::uniform_int_distribution<int> t(0, 20);
    for (int i = 0; i < 100; ++i) {
      FrontierRow r = row(c(rng), t(rng) / 20.0, rng() % 10 != 0);
      r.d_c = static_cast<std::size_t>(i);
      rows.push_back(r);
    }
    std::vector<FrontierRow> want;
    for (const auto& r : rows) {
      if (r.ok && !dominated(r, rows)) want.push_back(r);
    }
    std::stable_sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
      return a.cost < b.cost;
    });
    const auto got = pareto_frontier(rows);
    EXPECT_EQ(got, want);
    for (const auto& a : got) EXPECT_FALSE(dominated(a, got));
    EXPECT_TRUE(weakly_dominates(got, rows));
  }
}

TEST(Pareto, SmallCases) {
  EXPECT_TRUE(pareto_frontier({}).empty());
  const std::vector<FrontierRow> one{row(5, 0.5)};
  EXPECT_EQ(pareto_frontier(one), one);
  const std::vector<FrontierRow> dom{row(5, 0.5), row(3, 0.7)};
  EXPECT_EQ(pareto_frontier(dom), std::vector<FrontierRow>{row(3, 0.7)});
  const std::vector<FrontierRow> trade{row(5, 0.9), row(3, 0.7)};
  EXPECT_EQ(pareto_frontier(trade), (std::vector<FrontierRow>{row(3, 0.7), row(5, 0.9)}));
  const std::vector<FrontierRow> failed{row(1, 1.0, false)};
  EXPECT_TRUE(pareto_frontier(failed).empty());
}

TEST(Pareto, WeakDominance) {
  const std::vector<FrontierRow> a{row(2, 0.8), row(10, 0.95)};
  const std::vector<FrontierRow> b{row(2, 0.8), row(12, 0.9)};
  EXPECT_TRUE(weakly_dominates(a, b));
  EXPECT_FALSE(weakly_dominates(b, a));
  EXPECT_TRUE(weakly_dominates(a, std::vector<FrontierRow>{}));
}

// ---------------------------------------------------------------------------

TEST(FrontierCsv, RoundTripPreservesRows) {
  FrontierRow r;
  r.family = "composite";
  r.d_c = 16;
  r.d_s = 64;
  r.k = 256;
  r.n_p = 4;
  r.bytes = 8;
  r.top1 = 0.123456789012345;
  r.recall_1_at_1 = 1.0 / 3.0;
  r.cost = 4659486;
  r.seed = 18446744073709551615ull;
  EXPECT_EQ(parse_frontier_row(format_frontier_row(r)), r);
  r.ok = false;
  r.error = "bad, things\nhappened";
  const auto back = parse_frontier_row(format_frontier_row(r));
  EXPECT_FALSE(back.ok);
  EXPECT_EQ(back.error.find(','), std::string::npos);
  EXPECT_EQ(back.error.find('\n'), std::string::npos);
  EXPECT_EQ(std::count(kFrontierCsvHeader.begin(), kFrontierCsvHeader.end(), ','), 11);
}

TEST(FrontierCsv, MalformedInputThrows) {
  EXPECT_THROW(parse_frontier_row("ivf,1,2"), FormatError);
  EXPECT_THROW(parse_frontier_row("ivf,a,2,3,4,0,0.5,0.5,10,1,ok,"), FormatError);
  const auto dir = test::scratch_dir("frontier_csv");
  {
    std::ofstream out(dir / "bad.csv");
    out << "not,a,header\n";
  }
  EXPECT_THROW(read_frontier_csv(dir / "bad.csv"), FormatError);
  EXPECT_THROW(read_frontier_csv(dir / "missing.csv"), IoError);
  {
    std::ofstream out(dir / "good.csv");
    out << kFrontierCsvHeader << "\n" << format_frontier_row(row(3, 0.5)) << "\n";
  }
  EXPECT_EQ(read_frontier_csv(dir / "good.csv"), std::vector<FrontierRow>{row(3, 0.5)});
}

TEST(SweepHelpers, DimensionLadder) {
  EXPECT_EQ(dimension_ladder(2048),
            (std::vector<std::size_t>{8, 16, 32, 64, 128, 256, 512, 1024, 2048}));
  EXPECT_EQ(dimension_ladder(100), (std::vector<std::size_t>{8, 16, 32, 64}));
  EXPECT_TRUE(dimension_ladder(7).empty());
  EXPECT_EQ(dimension_ladder(4096).back(), 2048u);
}

TEST(SweepHelpers, FamilyNamesRoundTrip) {
  for (auto fam : {IndexFamily::kIvf, IndexFamily::kAdannsIvf, IndexFamily::kAdannsIvfD,
                   IndexFamily::kOpqExhaustive, IndexFamily::kComposite}) {
    EXPECT_EQ(parse_family(family_name(fam)), fam);
  }
  EXPECT_THROW(parse_family("hnsw"), ConfigError);
  EXPECT_THROW(parse_family(""), ConfigError);
}

TEST(SweepHelpers, ManifestDescribesTheRun) {
  const auto f = fixture(300, 10, 16);
  SweepSpec s = base_spec(f, IndexFamily::kComposite);
  s.d_c_grid = {8};
  s.bytes_grid = {2, 4};
  const auto j = nlohmann::json::parse(sweep_manifest_json(s));
  EXPECT_EQ(j["family"], "composite");
  EXPECT_EQ(j["seed"], 3);
  EXPECT_EQ(j["database"]["n"], 300);
  EXPECT_EQ(j["database"]["d"], 16);
  EXPECT_EQ(j["queries"]["n"], 10);
  EXPECT_EQ(j["grids"]["bytes"], nlohmann::json::array({2, 4}));
  EXPECT_EQ(j["columns"], std::string(kFrontierCsvHeader));
  EXPECT_FALSE(j["version"].get<std::string>().empty());
}

}  // namespace
}  // namespace adanns
