#include "pscd/matching.hpp"

#include <cmath>
#include <string>

#include "pscd/error.hpp"

namespace pscd {

namespace {

void check_dims(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("descriptor dims differ: " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

}  // namespace

double l2_distance(std::span<const float> a, std::span<const float> b) {
  check_dims(a.size(), b.size());
  return std::sqrt(kernels::l2_squared(a, b));
}

double l1_distance(std::span<const float> a, std::span<const float> b) {
  check_dims(a.size(), b.size());
  return kernels::l1(a, b);
}

Neighbor nearest_neighbor(std::span<const float> query, const DescriptorMatrix& pool,
                          Metric metric) {
  if (pool.empty()) throw EmptyPoolError("nearest_neighbor: empty pool");
  check_dims(query.size(), pool.dim());
  DescriptorMatrix q(query.size());
  q.append(query);
  return kernels::nearest(q, pool, metric).front();
}

std::vector<MatchPair> mutual_matches(const DescriptorMatrix& a, const DescriptorMatrix& b) {
  if (a.empty() || b.empty()) return {};
  check_dims(a.dim(), b.dim());
  const auto forward = kernels::nearest(a, b, Metric::L2);
  const auto backward = kernels::nearest(b, a, Metric::L2);
  std::vector<MatchPair> out;
  for (std::size_t i = 0; i < forward.size(); ++i) {
    const std::size_t j = forward[i].index;
    if (backward[j].index == i) out.push_back({i, j, forward[i].distance});
  }
  return out;
}

double nbnn_image_to_class(const DescriptorMatrix& query, const DescriptorMatrix& cls) {
  if (cls.empty()) throw EmptyPoolError("nbnn_image_to_class: empty class");
  if (query.empty()) return 0.0;
  check_dims(query.dim(), cls.dim());
  return kernels::nbnn_l1(query, cls);
}

}  // namespace pscd
