#pragma once

// Exhaustive descriptor-scan kernels.
//
// `pscd::kernels` holds the OpenMP versions used by the pipeline;
// `pscd::kernels::serial` holds plain single-loop references kept for
// testing and benchmarking. Both accumulate each pairwise distance in the
// same order in double precision, so their outputs are bitwise identical
// and independent of the thread count.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pscd/map_model.hpp"

namespace pscd {

enum class Metric { L1, L2 };

/// Index into a pool plus the metric distance (not squared for L2).
struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
  bool operator==(const Neighbor&) const = default;
};

namespace kernels {

inline double l1(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += std::fabs(d);
  }
  return acc;
}

inline double l2_squared(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += d * d;
  }
  return acc;
}

/// Nearest pool row for every query row; ties go to the lowest index.
/// Pool must be non-empty when queries is non-empty.
std::vector<Neighbor> nearest(const DescriptorMatrix& queries, const DescriptorMatrix& pool,
                              Metric metric);

/// L2-farthest pool row for every query row; ties go to the lowest index.
std::vector<Neighbor> farthest_l2(const DescriptorMatrix& queries, const DescriptorMatrix& pool);

/// Minimum L1 distance from each query row to the class rows.
std::vector<double> min_l1(const DescriptorMatrix& queries, const DescriptorMatrix& cls);

/// Sum of min_l1 taken in query order.
double nbnn_l1(const DescriptorMatrix& queries, const DescriptorMatrix& cls);

namespace serial {

std::vector<Neighbor> nearest(const DescriptorMatrix& queries, const DescriptorMatrix& pool,
                              Metric metric);
std::vector<Neighbor> farthest_l2(const DescriptorMatrix& queries, const DescriptorMatrix& pool);
std::vector<double> min_l1(const DescriptorMatrix& queries, const DescriptorMatrix& cls);
double nbnn_l1(const DescriptorMatrix& queries, const DescriptorMatrix& cls);

}  // namespace serial

}  // namespace kernels

/// Sets the OpenMP worker count used by the kernels (n <= 0 leaves it unchanged).
void set_worker_count(int n);
int worker_count();

}  // namespace pscd
