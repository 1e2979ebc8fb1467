#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pscd/kernels.hpp"
#include "pscd/map_model.hpp"

namespace pscd {

struct MatchPair {
  std::size_t query_index = 0;
  std::size_t target_index = 0;
  double distance = 0.0;
  bool operator==(const MatchPair&) const = default;
};

/// Throw DimensionError when the operands differ in length.
double l2_distance(std::span<const float> a, std::span<const float> b);
double l1_distance(std::span<const float> a, std::span<const float> b);

/// Exhaustive nearest neighbor; ties broken by lowest index.
/// Throws EmptyPoolError on an empty pool.
Neighbor nearest_neighbor(std::span<const float> query, const DescriptorMatrix& pool,
                          Metric metric);

/// Pairs (i, j) where j is i's L2 nearest neighbor in `b` and i is j's L2
/// nearest neighbor in `a`. Sorted by query_index; one-to-one.
std::vector<MatchPair> mutual_matches(const DescriptorMatrix& a, const DescriptorMatrix& b);
inline std::vector<MatchPair> mutual_matches(const FeatureSet& a, const FeatureSet& b) {
  return mutual_matches(a.descriptors, b.descriptors);
}

/// Naive-Bayes nearest-neighbor image-to-class distance: the sum over query
/// descriptors of the L1 distance to the closest class descriptor. The sum
/// is unnormalized, so it grows with the query's feature count.
/// Throws EmptyPoolError when the class is empty.
double nbnn_image_to_class(const DescriptorMatrix& query, const DescriptorMatrix& cls);
inline double nbnn_image_to_class(const FeatureSet& query, const FeatureSet& cls) {
  return nbnn_image_to_class(query.descriptors, cls.descriptors);
}

}  // namespace pscd
