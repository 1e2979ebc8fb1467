#include "pscd/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace pscd {

void set_worker_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int worker_count() { return omp_get_max_threads(); }

namespace kernels {

namespace {

// Queries handled together so each pool row is loaded once per tile.
constexpr std::size_t kTile = 8;

template <typename Dist, typename Better>
std::vector<Neighbor> scan(const DescriptorMatrix& queries, const DescriptorMatrix& pool,
                           double init, Dist dist, Better better) {
  const std::size_t nq = queries.rows();
  const std::size_t np = pool.rows();
  std::vector<Neighbor> out(nq);
  const auto tiles = static_cast<std::ptrdiff_t>((nq + kTile - 1) / kTile);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < tiles; ++t) {
    const std::size_t q0 = static_cast<std::size_t>(t) * kTile;
    const std::size_t qn = std::min(kTile, nq - q0);
    std::array<double, kTile> best;
    std::array<std::size_t, kTile> arg{};
    best.fill(init);
    for (std::size_t j = 0; j < np; ++j) {
      const auto p = pool.row(j);
      for (std::size_t u = 0; u < qn; ++u) {
        const double d = dist(queries.row(q0 + u), p);
        if (better(d, best[u])) {
          best[u] = d;
          arg[u] = j;
        }
      }
    }
    for (std::size_t u = 0; u < qn; ++u) out[q0 + u] = {arg[u], best[u]};
  }
  return out;
}

}  // namespace

std::vector<Neighbor> nearest(const DescriptorMatrix& queries, const DescriptorMatrix& pool,
                              Metric metric) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto less = [](double a, double b) { return a < b; };
  if (metric == Metric::L1) {
    return scan(queries, pool, inf, [](auto a, auto b) { return l1(a, b); }, less);
  }
  auto out = scan(queries, pool, inf, [](auto a, auto b) { return l2_squared(a, b); }, less);
  for (auto& n : out) n.distance = std::sqrt(n.distance);
  return out;
}

std::vector<Neighbor> farthest_l2(const DescriptorMatrix& queries, const DescriptorMatrix& pool) {
  auto out = scan(queries, pool, -1.0, [](auto a, auto b) { return l2_squared(a, b); },
                  [](double a, double b) { return a > b; });
  for (auto& n : out) n.distance = std::sqrt(n.distance);
  return out;
}

std::vector<double> min_l1(const DescriptorMatrix& queries, const DescriptorMatrix& cls) {
  const auto nn = nearest(queries, cls, Metric::L1);
  std::vector<double> out(nn.size());
  for (std::size_t i = 0; i < nn.size(); ++i) {
    out[i] = cls.empty() ? std::numeric_limits<double>::infinity() : nn[i].distance;
  }
  return out;
}

double nbnn_l1(const DescriptorMatrix& queries, const DescriptorMatrix& cls) {
  double total = 0.0;
  for (double d : min_l1(queries, cls)) total += d;
  return total;
}

}  // namespace kernels
}  // namespace pscd
