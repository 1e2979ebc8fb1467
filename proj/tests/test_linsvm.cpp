#include "doctest.h"
#include "pscd/error.hpp"
#include "pscd/linsvm.hpp"
#include "support.hpp"

using namespace pscd;
using testing::vec;

namespace {

// Separable instance: uniform points in [-1,1]^d labelled by a random
// hyperplane, rejecting points closer than `margin` to it.
std::pair<oracle::Set, oracle::Set> separable(std::mt19937_64& rng, std::size_t n, std::size_t d,
                                              double margin) {
  std::normal_distribution<double> g;
  oracle::Vec u(d);
  double norm = 0;
  for (auto& x : u) {
    x = g(rng);
    norm += x * x;
  }
  for (auto& x : u) x /= std::sqrt(norm);
  const double offset = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
  oracle::Set pos, neg;
  while (pos.size() + neg.size() < n || pos.empty() || neg.empty()) {
    const auto x = oracle::random_set(rng, 1, d)[0];
    double s = -offset;
    for (std::size_t k = 0; k < d; ++k) s += u[k] * x[k];
    if (std::abs(s) < margin) continue;
    (s > 0 ? pos : neg).push_back(x);
  }
  return {pos, neg};
}

}  // namespace

TEST_CASE("score by hand") {
  SvmModel m;
  m.weights = {1, 2};
  m.bias = -1;
  CHECK(score(m, vec({3, 1})) == doctest::Approx(4.0));
  SvmModel zero;
  zero.weights = {0, 0, 0};
  CHECK(score(zero, vec({5, -2, 7})) == 0.0);
  CHECK_THROWS_AS(score(m, vec({1, 2, 3})), DimensionError);
}

TEST_CASE("score matches the dot-product oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto wx = oracle::random_set(rng, 2, 32, -5, 5);
    SvmModel m;
    m.weights = wx[0];
    m.bias = 0.25 * trial;
    const std::vector<float> x(wx[1].begin(), wx[1].end());
    double want = m.bias;
    for (std::size_t k = 0; k < 32; ++k) want += wx[0][k] * wx[1][k];
    CHECK(std::abs(score(m, x) - want) <= 1e-6 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("rank by score") {
  SvmModel m;
  m.weights = {1};
  const auto xs = testing::matrix({{0.5}, {2.0}, {2.0}, {-1.0}});
  CHECK(rank_by_score(m, xs) == std::vector<std::size_t>{1, 2, 0, 3});
  CHECK(rank_by_score(m, DescriptorMatrix(1)).empty());
  m.bias = 123.0;
  CHECK(rank_by_score(m, xs) == std::vector<std::size_t>{1, 2, 0, 3});

  std::mt19937_64 rng(22);
  const auto s = oracle::random_set(rng, 500, 4);
  m.weights = {0.5, -1, 2, 0};
  std::vector<double> sc;
  for (const auto& x : s) sc.push_back(score(m, std::vector<float>(x.begin(), x.end())));
  CHECK(rank_by_score(m, testing::matrix(s)) == oracle::sort_desc(sc));
}

TEST_CASE("symmetric two-point problem") {
  const auto pos = testing::matrix({{1, 0}, {1, 0}, {1, 0}});
  const auto neg = testing::matrix({{-1, 0}, {-1, 0}});
  const auto m = train_svm(pos, neg);
  CHECK(score(m, vec({1, 0})) > 0);
  CHECK(score(m, vec({-1, 0})) < 0);
}

TEST_CASE("training is deterministic per seed") {
  std::mt19937_64 rng(23);
  const auto [p, n] = separable(rng, 200, 5, 0.1);
  const auto pm = testing::matrix(p), nm = testing::matrix(n);
  SvmHyper h;
  h.seed = 9;
  const auto a = train_svm(pm, nm, h);
  const auto b = train_svm(pm, nm, h);
  CHECK(a == b);
  CHECK(a.training_seed == 9);
  h.seed = 10;
  CHECK_FALSE(train_svm(pm, nm, h).weights == a.weights);
}

TEST_CASE("training errors") {
  const auto pos = testing::matrix({{1, 0}});
  CHECK_THROWS_AS(train_svm(pos, DescriptorMatrix(2)), OneSidedTrainingError);
  CHECK_THROWS_AS(train_svm(DescriptorMatrix(2), pos), OneSidedTrainingError);
  CHECK_THROWS_AS(train_svm(pos, testing::matrix({{1, 0, 0}})), DimensionError);
  CHECK_THROWS_AS(train_svm(pos, pos, SvmHyper{0.0, 20, 0}), ParameterError);
  CHECK_THROWS_AS(train_svm(pos, pos, SvmHyper{1.0, 0, 0}), ParameterError);
}

TEST_CASE("200-sample separable 5-D set is separated near the batch optimum") {
  std::mt19937_64 rng(24);
  const auto [p, n] = separable(rng, 200, 5, 0.1);
  const auto pm = testing::matrix(p), nm = testing::matrix(n);
  const SvmHyper h{10.0, 4000, 0};
  const auto m = train_svm(pm, nm, h);
  for (const auto& x : p) CHECK(score(m, std::vector<float>(x.begin(), x.end())) > 0);
  for (const auto& x : n) CHECK(score(m, std::vector<float>(x.begin(), x.end())) < 0);
  const auto ref = oracle::batch_subgradient(p, n, h.c, 20000);
  const double ref_obj = oracle::objective(ref, h.c, p, n);
  CHECK(svm_objective(m, pm, nm) <= 1.05 * ref_obj);
  CHECK(svm_objective(m, pm, nm) == doctest::Approx(oracle::objective({m.weights, m.bias}, h.c, p, n)));
}

TEST_CASE("model json round trip") {
  SvmModel m;
  m.weights = {0.1, -2.5, 1e-300};
  m.bias = 3.75;
  m.hyper = {2.0, 7, 42};
  m.training_seed = 42;
  CHECK(svm_from_json(to_json(m)) == m);
  testing::TempDir dir("svm");
  save_svm(dir / "m.json", m);
  CHECK(load_svm(dir / "m.json") == m);
}
