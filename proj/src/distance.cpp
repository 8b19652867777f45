#include "adanns/distance.hpp"

#include <algorithm>
#include <string>

#include "adanns/error.hpp"

namespace adanns {

void keep_topk(std::vector<Neighbor>& candidates, std::size_t topk) {
  if (candidates.size() > topk) {
    std::partial_sort(candidates.begin(),
                      candidates.begin() + static_cast<std::ptrdiff_t>(topk),
                      candidates.end(), closer);
    candidates.resize(topk);
  } else {
    std::sort(candidates.begin(), candidates.end(), closer);
  }
}

std::vector<Neighbor> flat_search(const EmbeddingView& base,
                                  std::span<const float> query,
                                  std::size_t topk) {
  const std::size_t dim = base.dim();
  if (query.size() < dim) {
    throw DimensionError("query has " + std::to_string(query.size()) +
                         " dims, search needs " + std::to_string(dim));
  }
  std::vector<Neighbor> all(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    all[i] = {static_cast<std::uint32_t>(i),
              l2_sq(query.data(), base.row(i).data(), dim)};
  }
  keep_topk(all, topk);
  return all;
}

}  // namespace adanns
