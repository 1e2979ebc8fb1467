#include <cmath>
#include <limits>

#include "pscd/kernels.hpp"

namespace pscd::kernels::serial {

std::vector<Neighbor> nearest(const DescriptorMatrix& queries, const DescriptorMatrix& pool,
                              Metric metric) {
  std::vector<Neighbor> out(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < pool.rows(); ++j) {
      const double d = metric == Metric::L2 ? l2_squared(queries.row(i), pool.row(j))
                                            : l1(queries.row(i), pool.row(j));
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    out[i] = {arg, metric == Metric::L2 ? std::sqrt(best) : best};
  }
  return out;
}

std::vector<Neighbor> farthest_l2(const DescriptorMatrix& queries, const DescriptorMatrix& pool) {
  std::vector<Neighbor> out(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < pool.rows(); ++j) {
      const double d = l2_squared(queries.row(i), pool.row(j));
      if (d > best) {
        best = d;
        arg = j;
      }
    }
    out[i] = {arg, std::sqrt(best)};
  }
  return out;
}

std::vector<double> min_l1(const DescriptorMatrix& queries, const DescriptorMatrix& cls) {
  std::vector<double> out(queries.rows(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    for (std::size_t j = 0; j < cls.rows(); ++j) {
      const double d = l1(queries.row(i), cls.row(j));
      if (d < out[i]) out[i] = d;
    }
  }
  return out;
}

double nbnn_l1(const DescriptorMatrix& queries, const DescriptorMatrix& cls) {
  double total = 0.0;
  for (double d : min_l1(queries, cls)) total += d;
  return total;
}

}  // namespace pscd::kernels::serial
