#include "adanns/composite.hpp"

#include <algorithm>
#include <string>

#include "adanns/error.hpp"

namespace adanns {

namespace {

constexpr char kCompositeMagic[] = "ADNSCMP1";
constexpr std::uint32_t kCompositeVersion = 1;

}  // namespace

CompositeIndex CompositeIndex::build(std::shared_ptr<const EmbeddingSet> source,
                                     std::size_t d_c, std::size_t k,
                                     const CodecSpec& codec_spec,
                                     std::size_t rerank_dim,
                                     const KmeansConfig& kcfg) {
  if (!source || source->empty()) throw ConfigError("composite: empty source");
  const std::size_t full = source->dim();
  if (codec_spec.d_q < 1 || codec_spec.d_q > full) {
    throw DimensionError("composite: d_q=" + std::to_string(codec_spec.d_q) +
                         " outside [1, " + std::to_string(full) + "]");
  }
  if (rerank_dim > full) {
    throw DimensionError("composite: rerank_dim exceeds data dimension");
  }

  CompositeIndex index;
  index.ivf_ = IvfIndex::build(source, d_c, k, kcfg);
  const EmbeddingView qview = source->prefix(codec_spec.d_q);
  index.codec_ = codec_spec.opq
                     ? train_opq(qview, codec_spec.m, codec_spec.opq_iters, kcfg)
                     : train_pq(qview, codec_spec.m, kcfg);
  index.codes_ = index.codec_.encode(qview);
  index.rerank_dim_ = rerank_dim;
  return index;
}

CompositeResult CompositeIndex::search(std::span<const float> query,
                                       const SearchParams& p,
                                       std::size_t shortlist) const {
  if (p.topk < 1) throw ConfigError("topk must be >= 1");
  if (shortlist == 0) shortlist = kDefaultShortlistFactor * p.topk;
  if (rerank_dim_ > 0 && shortlist < p.topk) {
    throw ConfigError("shortlist must be >= topk when re-ranking");
  }
  const std::size_t need =
      std::max({ivf_.d_c(), codec_.d_q(), rerank_dim_});
  if (query.size() < need) {
    throw DimensionError("query has " + std::to_string(query.size()) +
                         " dims, composite search needs " + std::to_string(need));
  }

  const std::size_t shortlist_dim = p.d_shortlist == 0 ? ivf_.d_c() : p.d_shortlist;
  const auto probed = ivf_.probe(query, shortlist_dim, p.n_probe);
  const AdcTable table = codec_.adc_table(query);

  std::vector<Neighbor> candidates;
  for (auto list : probed) {
    for (auto id : ivf_.lists()[list]) {
      candidates.push_back({id, table(codes_.code(id))});
    }
  }

  CompositeResult result;
  result.underfill = candidates.size() < p.topk;
  if (rerank_dim_ == 0) {
    keep_topk(candidates, p.topk);
    result.neighbors = std::move(candidates);
    return result;
  }

  keep_topk(candidates, shortlist);
  const EmbeddingSet& base = ivf_.source();
  for (auto& nb : candidates) {
    nb.distance = l2_sq(query.data(), base.row(nb.id).data(), rerank_dim_);
  }
  keep_topk(candidates, p.topk);
  result.neighbors = std::move(candidates);
  return result;
}

void CompositeIndex::write(ByteWriter& out) const {
  out.put_tag(std::string_view(kCompositeMagic, 8));
  out.put(kCompositeVersion);
  out.put(static_cast<std::uint32_t>(rerank_dim_));
  ivf_.write(out);
  codec_.write(out);
  codes_.write(out);
}

CompositeIndex CompositeIndex::read(ByteReader& in,
                                    std::shared_ptr<const EmbeddingSet> source) {
  in.expect_tag(std::string_view(kCompositeMagic, 8));
  const std::size_t header_at = in.offset();
  if (in.get<std::uint32_t>("version") != kCompositeVersion) {
    throw FormatError("unsupported composite version", header_at);
  }
  CompositeIndex index;
  index.rerank_dim_ = in.get<std::uint32_t>("rerank_dim");
  index.ivf_ = IvfIndex::read(in, std::move(source));
  const std::size_t codec_at = in.offset();
  index.codec_ = PqCodec::read(in);
  const std::size_t codes_at = in.offset();
  index.codes_ = PqCodes::read(in);

  const EmbeddingSet& base = index.ivf_.source();
  if (index.rerank_dim_ > base.dim()) {
    throw FormatError("rerank_dim exceeds database dimension", header_at);
  }
  if (index.codec_.d_q() > base.dim()) {
    throw FormatError("codec d_q exceeds database dimension", codec_at);
  }
  if (index.codes_.n != base.size() || index.codes_.m != index.codec_.m()) {
    throw FormatError("code matrix does not match database and codec", codes_at);
  }
  return index;
}

void CompositeIndex::save(const std::filesystem::path& path) const {
  ByteWriter out;
  write(out);
  write_file_bytes(path, out.bytes());
}

CompositeIndex CompositeIndex::load(const std::filesystem::path& path,
                                    std::shared_ptr<const EmbeddingSet> source) {
  const auto bytes = read_file_bytes(path);
  ByteReader in(bytes);
  CompositeIndex index = read(in, std::move(source));
  if (!in.at_end()) {
    throw FormatError("trailing bytes after composite index", in.offset());
  }
  return index;
}

}  // namespace adanns
