#include <gtest/gtest.h>

#include <set>

#include "adanns/composite.hpp"
#include "adanns/error.hpp"
#include "support.hpp"

namespace adanns {
namespace {

using test::share;

KmeansConfig kcfg(std::uint64_t seed = 7) {
  KmeansConfig c;
  c.seed = seed;
  c.max_iters = 10;
  return c;
}

SyntheticData mr(std::size_t n, std::size_t nq, std::size_t d, double sep = 2.0) {
  SyntheticMrSpec spec;
  spec.n = n;
  spec.num_queries = nq;
  spec.d = d;
  spec.class_sep = sep;
  spec.seed = 23;
  return generate_synthetic_mr(spec);
}

CodecSpec codec(std::size_t d_q, std::size_t m, bool opq = true) {
  return {.d_q = d_q, .m = m, .opq = opq, .opq_iters = 3};
}

TEST(CompositeBuild, ShapesAndInvariants) {
  const auto data = mr(600, 1, 32);
  const auto db = share(data.database);
  const auto idx = CompositeIndex::build(db, 8, 6, codec(16, 4), 32, kcfg());
  EXPECT_EQ(idx.codes().n, 600u);
  EXPECT_EQ(idx.codes().m, 4u);
  EXPECT_EQ(idx.codec().d_q(), 16u);
  EXPECT_EQ(idx.ivf().d_c(), 8u);
  EXPECT_EQ(idx.rerank_dim(), 32u);
  std::set<std::uint32_t> filed;
  for (const auto& l : idx.ivf().lists()) filed.insert(l.begin(), l.end());
  EXPECT_EQ(filed.size(), 600u);
}

TEST(CompositeBuild, InvalidParametersThrow) {
  const auto db = share(test::random_set(300, 16, 1));
  EXPECT_THROW(CompositeIndex::build(db, 8, 4, codec(17, 1), 0, kcfg()), DimensionError);
  EXPECT_THROW(CompositeIndex::build(db, 8, 4, codec(0, 1), 0, kcfg()), DimensionError);
  EXPECT_THROW(CompositeIndex::build(db, 8, 4, codec(16, 4), 17, kcfg()), DimensionError);
  EXPECT_THROW(CompositeIndex::build(db, 8, 4, codec(16, 3), 0, kcfg()), ConfigError);
  EXPECT_THROW(CompositeIndex::build(db, 17, 4, codec(16, 4), 0, kcfg()), DimensionError);
  EXPECT_THROW(CompositeIndex::build(db, 8, 301, codec(16, 4), 0, kcfg()), ConfigError);
}

// Without re-ranking and with every list probed, the composite equals the
// exhaustive ADC scan over all codes.
TEST(CompositeSearch, FullProbeWithoutRerankEqualsExhaustiveAdc) {
  const auto data = mr(1000, 50, 32);
  const auto db = share(data.database);
  for (bool opq : {false, true}) {
    const auto idx = CompositeIndex::build(db, 8, 10, codec(16, 4, opq), 0, kcfg());
    for (std::size_t q = 0; q < data.queries.size(); ++q) {
      const auto r = idx.search(data.queries.row(q), {.d_s = 16, .n_probe = 10, .topk = 7});
      EXPECT_FALSE(r.underfill);
      EXPECT_EQ(r.neighbors, adc_search(idx.codec(), idx.codes(), data.queries.row(q), 7));
    }
  }
}

// Full-dimension re-rank over the whole database is exact search.
TEST(CompositeSearch, FullRerankOverEverythingIsExact) {
  const auto data = mr(800, 60, 24);
  const auto db = share(data.database);
  const auto idx = CompositeIndex::build(db, 6, 8, codec(12, 4), 24, kcfg());
  for (std::size_t q = 0; q < data.queries.size(); ++q) {
    const auto r = idx.search(data.queries.row(q), {.d_s = 24, .n_probe = 8, .topk = 10}, 800);
    const auto want = test::brute_force(*db, data.queries.row(q), 24, 10);
    ASSERT_EQ(r.neighbors.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_EQ(r.neighbors[i].id, want[i].id);
      EXPECT_TRUE(test::rel_close(r.neighbors[i].distance, want[i].distance, 1e-5));
    }
  }
}

// With the shortlist covering every probed point, the output is the exact
// rerank-prefix ranking of the probed points.
TEST(CompositeSearch, ShortlistCoveringProbedSetGivesExactRankingOfProbed) {
  const auto data = mr(900, 40, 32);
  const auto db = share(data.database);
  const auto idx = CompositeIndex::build(db, 8, 12, codec(8, 2), 16, kcfg());
  for (std::size_t q = 0; q < data.queries.size(); ++q) {
    const auto query = data.queries.row(q);
    const auto probed = idx.ivf().probe(query, 8, 3);
    std::vector<test::Hit> hits;
    for (auto l : probed) {
      for (auto id : idx.ivf().lists()[l]) {
        hits.push_back({id, test::l2_sq_double(db->row(id), query, 16)});
      }
    }
    std::sort(hits.begin(), hits.end(), [](const test::Hit& a, const test::Hit& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
    });
    const auto r = idx.search(query, {.d_s = 8, .n_probe = 3, .topk = 5}, hits.size());
    ASSERT_EQ(r.neighbors.size(), std::min<std::size_t>(5, hits.size()));
    for (std::size_t i = 0; i < r.neighbors.size(); ++i) {
      EXPECT_EQ(r.neighbors[i].id, hits[i].id);
    }
  }
}

TEST(CompositeSearch, UnderfillFlagIffTooFewCandidates) {
  const auto db = share(test::random_set(60, 8, 2));
  const auto idx = CompositeIndex::build(db, 8, 20, codec(8, 2), 0, kcfg());
  for (std::uint32_t i = 0; i < 60; i += 5) {
    const auto q = db->row(i);
    for (std::size_t np : {1u, 2u, 20u}) {
      std::size_t probed = 0;
      for (auto l : idx.ivf().probe(q, 8, np)) probed += idx.ivf().lists()[l].size();
      const auto r = idx.search(q, {.d_s = 8, .n_probe = np, .topk = 6});
      EXPECT_EQ(r.underfill, probed < 6);
      EXPECT_EQ(r.neighbors.size(), std::min<std::size_t>(6, probed));
    }
  }
}

double label_top1(const CompositeIndex& idx, const SyntheticData& data,
                  const SearchParams& p, std::size_t shortlist) {
  std::size_t ok = 0;
  for (std::size_t q = 0; q < data.queries.size(); ++q) {
    const auto r = idx.search(data.queries.row(q), p, shortlist);
    ok += !r.neighbors.empty() &&
          data.database.labels()[r.neighbors[0].id] == data.queries.labels()[q];
  }
  return double(ok) / double(data.queries.size());
}

TEST(CompositeSearch, LargerShortlistNeverLowersTop1OrRankOneDistance) {
  const auto data = mr(3000, 300, 64, 1.5);
  const auto db = share(data.database);
  const auto idx = CompositeIndex::build(db, 16, 16, codec(16, 4), 64, kcfg());
  const SearchParams p{.d_s = 16, .n_probe = 4, .topk = 1};
  double prev_top1 = 0;
  std::vector<float> prev_best(data.queries.size(), std::numeric_limits<float>::infinity());
  for (std::size_t sl : {1u, 10u, 50u, 100u, 500u}) {
    const double t = label_top1(idx, data, p, sl);
    EXPECT_GE(t, prev_top1) << "shortlist " << sl;
    prev_top1 = t;
    for (std::size_t q = 0; q < data.queries.size(); ++q) {
      const float d = idx.search(data.queries.row(q), p, sl).neighbors[0].distance;
      EXPECT_LE(d, prev_best[q]);
      prev_best[q] = d;
    }
  }
}

// Low-d clustering, low-d codes at half the bytes and a full-d re-rank match
// the rigid full-d composite.
TEST(CompositeSearch, AdaptiveMatchesRigidAtHalfTheCodeBytes) {
  const auto data = mr(3000, 400, 64, 1.5);
  const auto db = share(data.database);
  const auto rigid = CompositeIndex::build(db, 64, 16, codec(64, 16), 64, kcfg());
  const auto adaptive = CompositeIndex::build(db, 16, 16, codec(32, 8), 64, kcfg());
  EXPECT_LE(adaptive.codec().code_bytes() * 2, rigid.codec().code_bytes());
  const double r = label_top1(rigid, data, {.d_s = 64, .n_probe = 4, .topk = 1}, 100);
  const double a = label_top1(adaptive, data, {.d_s = 32, .n_probe = 4, .topk = 1}, 100);
  EXPECT_GE(a, r - 0.005);
}

TEST(CompositeSearch, ParameterErrors) {
  const auto db = share(test::random_set(200, 16, 3));
  const auto idx = CompositeIndex::build(db, 8, 4, codec(16, 4), 16, kcfg());
  const auto q = db->row(0);
  EXPECT_THROW(idx.search(q, {.d_s = 16, .n_probe = 1, .topk = 5}, 3), ConfigError);
  EXPECT_THROW(idx.search(q, {.d_s = 16, .n_probe = 1, .topk = 0}), ConfigError);
  EXPECT_THROW(idx.search(q, {.d_s = 16, .n_probe = 5, .topk = 1}), ConfigError);
  EXPECT_THROW(idx.search(q.first(15), {.d_s = 16, .n_probe = 1, .topk = 1}), DimensionError);
}

TEST(CompositeSerialization, RoundTripIsBitExact) {
  const auto dir = test::scratch_dir("composite_rt");
  const auto data = mr(500, 20, 32);
  const auto db = share(data.database);
  const auto idx = CompositeIndex::build(db, 8, 5, codec(16, 4), 32, kcfg());
  idx.save(dir / "a.cmp");
  const auto back = CompositeIndex::load(dir / "a.cmp", db);
  back.save(dir / "b.cmp");
  EXPECT_EQ(test::file_bytes(dir / "a.cmp"), test::file_bytes(dir / "b.cmp"));
  EXPECT_EQ(back.codes(), idx.codes());
  for (std::size_t q = 0; q < 20; ++q) {
    const SearchParams p{.d_s = 16, .n_probe = 2, .topk = 5};
    EXPECT_EQ(back.search(data.queries.row(q), p).neighbors,
              idx.search(data.queries.row(q), p).neighbors);
  }
  auto bytes = test::file_bytes(dir / "a.cmp");
  bytes.pop_back();
  ByteReader r(bytes);
  EXPECT_THROW(CompositeIndex::read(r, db), FormatError);
  EXPECT_THROW(CompositeIndex::load(dir / "missing.cmp", db), IoError);
}

}  // namespace
}  // namespace adanns
