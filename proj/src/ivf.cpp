#include "adanns/ivf.hpp"

#include <algorithm>
#include <string>

#include "adanns/error.hpp"

namespace adanns {

namespace {

constexpr char kIvfMagic[] = "ADNSIVF1";
constexpr std::uint32_t kIvfVersion = 1;

std::vector<std::vector<std::uint32_t>> file_lists(
    const std::vector<std::uint32_t>& labels, std::size_t k) {
  std::vector<std::vector<std::uint32_t>> lists(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    lists[labels[i]].push_back(static_cast<std::uint32_t>(i));
  }
  return lists;
}

std::vector<std::uint32_t> nearest_lists(std::span<const float> query,
                                         const Centroids& c, std::size_t dim,
                                         std::size_t n_probe) {
  std::vector<Neighbor> ranked(c.k);
  for (std::size_t i = 0; i < c.k; ++i) {
    ranked[i] = {static_cast<std::uint32_t>(i),
                 l2_sq(query.data(), c.data.data() + i * c.dim, dim)};
  }
  keep_topk(ranked, n_probe);
  std::vector<std::uint32_t> out;
  out.reserve(ranked.size());
  for (const auto& nb : ranked) out.push_back(nb.id);
  return out;
}

}  // namespace

IvfIndex IvfIndex::build(std::shared_ptr<const EmbeddingSet> source,
                         std::size_t d_c, std::size_t k, KmeansConfig kcfg) {
  if (!source || source->empty()) throw ConfigError("IVF build: empty source");
  if (d_c < 1 || d_c > source->dim()) {
    throw DimensionError("IVF build: d_c=" + std::to_string(d_c) +
                         " outside [1, " + std::to_string(source->dim()) + "]");
  }
  if (k < 1 || k > source->size()) {
    throw ConfigError("IVF build: k=" + std::to_string(k) + " outside [1, n=" +
                      std::to_string(source->size()) + "]");
  }
  kcfg.k = k;
  const EmbeddingView view = source->prefix(d_c);

  IvfIndex index;
  index.source_ = std::move(source);
  index.d_c_ = d_c;
  index.centroids_ = train_kmeans(view, kcfg);
  index.lists_ = file_lists(assign(view, index.centroids_, kcfg.workers), k);
  return index;
}

std::vector<std::uint32_t> IvfIndex::probe(std::span<const float> query,
                                           std::size_t shortlist_dim,
                                           std::size_t n_probe) const {
  if (shortlist_dim < 1 || shortlist_dim > d_c_) {
    throw DimensionError("probe dimension " + std::to_string(shortlist_dim) +
                         " outside [1, d_c=" + std::to_string(d_c_) + "]");
  }
  if (n_probe < 1 || n_probe > k()) {
    throw ConfigError("n_probe=" + std::to_string(n_probe) + " outside [1, k=" +
                      std::to_string(k()) + "]");
  }
  if (query.size() < shortlist_dim) {
    throw DimensionError("query shorter than probe dimension");
  }
  return nearest_lists(query, centroids_, shortlist_dim, n_probe);
}

std::vector<Neighbor> IvfIndex::search(std::span<const float> query,
                                       const SearchParams& p) const {
  if (!source_ || lists_.empty()) throw ConfigError("search on empty index");
  const std::size_t full = source_->dim();
  if (p.d_s < 1 || p.d_s > full) {
    throw DimensionError("d_s=" + std::to_string(p.d_s) + " outside [1, " +
                         std::to_string(full) + "]");
  }
  if (p.topk < 1) throw ConfigError("topk must be >= 1");
  const std::size_t shortlist_dim = p.d_shortlist == 0 ? d_c_ : p.d_shortlist;
  if (query.size() < std::max(shortlist_dim, p.d_s)) {
    throw DimensionError("query has " + std::to_string(query.size()) +
                         " dims, search needs " +
                         std::to_string(std::max(shortlist_dim, p.d_s)));
  }

  const auto probed = probe(query, shortlist_dim, p.n_probe);
  std::vector<Neighbor> candidates;
  const float* base = source_->data().data();
  for (auto list : probed) {
    for (auto id : lists_[list]) {
      candidates.push_back(
          {id, l2_sq(query.data(), base + std::size_t{id} * full, p.d_s)});
    }
  }
  keep_topk(candidates, p.topk);
  return candidates;
}

std::vector<Neighbor> IvfIndex::search_adaptive_d(std::span<const float> query,
                                                  std::size_t d_hat,
                                                  std::size_t n_probe,
                                                  std::size_t topk) const {
  if (!source_ || d_c_ != source_->dim()) {
    throw ConfigError(
        "search_adaptive_d requires an index built at the full dimension");
  }
  if (d_hat < 1 || d_hat > d_c_) {
    throw DimensionError("d_hat=" + std::to_string(d_hat) + " outside [1, " +
                         std::to_string(d_c_) + "]");
  }
  return search(query, {.d_s = d_hat,
                        .n_probe = n_probe,
                        .topk = topk,
                        .d_shortlist = d_hat});
}

void IvfIndex::write(ByteWriter& out) const {
  out.put_tag(std::string_view(kIvfMagic, 8));
  out.put(kIvfVersion);
  out.put(static_cast<std::uint64_t>(source_->size()));
  out.put(static_cast<std::uint32_t>(source_->dim()));
  out.put(static_cast<std::uint32_t>(centroids_.k));
  out.put(static_cast<std::uint32_t>(d_c_));
  out.put_array(std::span<const float>(centroids_.data));
  for (const auto& list : lists_) {
    out.put(static_cast<std::uint32_t>(list.size()));
    out.put_array(std::span<const std::uint32_t>(list));
  }
}

IvfIndex IvfIndex::read(ByteReader& in,
                        std::shared_ptr<const EmbeddingSet> source) {
  in.expect_tag(std::string_view(kIvfMagic, 8));
  const std::size_t version_at = in.offset();
  if (in.get<std::uint32_t>("version") != kIvfVersion) {
    throw FormatError("unsupported IVF version", version_at);
  }
  const std::size_t header_at = in.offset();
  const auto n = in.get<std::uint64_t>("n");
  const auto dim = in.get<std::uint32_t>("source dim");
  const auto k = in.get<std::uint32_t>("k");
  const auto d_c = in.get<std::uint32_t>("d_c");
  if (!source || source->size() != n || source->dim() != dim) {
    throw FormatError("IVF file was built over a " + std::to_string(n) + "x" +
                          std::to_string(dim) +
                          " database; the supplied database does not match",
                      header_at);
  }
  if (k == 0 || d_c == 0 || d_c > dim || k > n) {
    throw FormatError("invalid IVF header (k or d_c out of range)", header_at);
  }

  IvfIndex index;
  index.source_ = std::move(source);
  index.d_c_ = d_c;
  index.centroids_.k = k;
  index.centroids_.dim = d_c;
  index.centroids_.data.resize(std::size_t{k} * d_c);
  in.get_array(std::span<float>(index.centroids_.data), "centroid block");

  index.lists_.resize(k);
  std::vector<char> seen(n, 0);
  std::size_t filed = 0;
  for (auto& list : index.lists_) {
    const std::size_t list_at = in.offset();
    const auto len = in.get<std::uint32_t>("list length");
    in.require(std::size_t{len} * 4, "id list");
    list.resize(len);
    in.get_array(std::span<std::uint32_t>(list), "id list");
    for (auto id : list) {
      if (id >= n || seen[id]) {
        throw FormatError("id list entry out of range or duplicated", list_at);
      }
      seen[id] = 1;
    }
    filed += len;
  }
  if (filed != n) {
    throw FormatError("inverted lists do not cover every database id",
                      in.offset());
  }
  return index;
}

void IvfIndex::save(const std::filesystem::path& path) const {
  ByteWriter out;
  write(out);
  write_file_bytes(path, out.bytes());
}

IvfIndex IvfIndex::load(const std::filesystem::path& path,
                        std::shared_ptr<const EmbeddingSet> source) {
  const auto bytes = read_file_bytes(path);
  ByteReader in(bytes);
  IvfIndex index = read(in, std::move(source));
  if (!in.at_end()) throw FormatError("trailing bytes after IVF index", in.offset());
  return index;
}

// ---------------------------------------------------------------------------

RigidIvf RigidIvf::build(const EmbeddingSet& set, std::size_t d, std::size_t k,
                         KmeansConfig kcfg) {
  if (k < 1 || k > set.size()) throw ConfigError("RigidIvf: k out of range");
  RigidIvf ivf;
  ivf.data_ = set.truncated(d);
  kcfg.k = k;
  ivf.centroids_ = train_kmeans(ivf.data_.view(), kcfg);
  ivf.lists_.assign(k, {});
  for (std::size_t i = 0; i < ivf.data_.size(); ++i) {
    const auto c = nearest_centroid(ivf.data_.row(i), ivf.centroids_, d);
    ivf.lists_[c].push_back(static_cast<std::uint32_t>(i));
  }
  return ivf;
}

std::vector<Neighbor> RigidIvf::search(std::span<const float> query,
                                       std::size_t n_probe,
                                       std::size_t topk) const {
  const std::size_t d = data_.dim();
  if (query.size() < d) throw DimensionError("RigidIvf: query too short");
  if (n_probe < 1 || n_probe > centroids_.k) {
    throw ConfigError("RigidIvf: n_probe out of range");
  }
  std::vector<Neighbor> out;
  for (auto list : nearest_lists(query, centroids_, d, n_probe)) {
    for (auto id : lists_[list]) {
      out.push_back({id, l2_sq(query.data(), data_.row(id).data(), d)});
    }
  }
  keep_topk(out, topk);
  return out;
}

}  // namespace adanns
