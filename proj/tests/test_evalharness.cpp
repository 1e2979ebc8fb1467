#include "doctest.h"
#include "pscd/error.hpp"
#include "pscd/evalharness.hpp"
#include "pscd/kernels.hpp"
#include "pscd/synthgen.hpp"
#include "support.hpp"

using namespace pscd;

namespace {

ViewSequenceMap straight_line(int n) {
  ViewSequenceMap m;
  m.image_width = 10;
  m.image_height = 10;
  m.descriptor_dim = 1;
  for (int i = 0; i < n; ++i) {
    Frame f;
    f.id = i;
    f.pose = {static_cast<double>(i), 0};
    f.features.descriptors = DescriptorMatrix(1);
    m.frames.push_back(f);
  }
  return m;
}

const SynthData& small_benchmark() {
  static const SynthData data = [] {
    SynthConfig c;
    c.frames_per_place = 15;
    c.features_per_frame = 40;
    c.n_queries = 8;
    c.experience_size = 300;
    return generate(c);
  }();
  return data;
}

}  // namespace

TEST_CASE("relevant pair without the path condition is the nearest pose") {
  const auto m = straight_line(20);
  CHECK(find_relevant_pair(m, {7.2, 3.0}, 0) == 7);
  CHECK(find_relevant_pair(m, {7.5, 0.0}, 0) == 7);  // tie goes to the lower id
  CHECK(insertion_point(m, {100, 0}) == 19);
}

TEST_CASE("relevant pair on a straight line honours the traveled distance") {
  const auto m = straight_line(100);
  const CumulativePath path(m);
  for (int anchor : {10, 45, 80}) {
    const Pose2 q{static_cast<double>(anchor), 0.4};
    int want = -1;
    double best = 1e300;
    for (int j = 0; j < 100; ++j) {
      if (std::abs(j - anchor) <= 50) continue;
      const double d = std::hypot(j - q.x, q.y);
      if (d < best) {
        best = d;
        want = j;
      }
    }
    if (want < 0) {
      CHECK_THROWS_AS(find_relevant_pair(m, q, 50), NoRelevantPairError);
    } else {
      CHECK(find_relevant_pair(m, q, 50) == want);
      CHECK(path.between(anchor, want) > 50);
    }
  }
  CHECK(find_relevant_pair(m, {10, 0}, 50) == 61);
}

TEST_CASE("loop-closure pairing on synthetic loops") {
  const auto& data = small_benchmark();
  const CumulativePath path(data.map);
  const int lap = data.truth.boundaries[3];
  auto place_of = [&](int frame) {
    int seg = 0;
    for (std::size_t b = 0; b < data.truth.boundaries.size(); ++b) {
      if (data.truth.boundaries[b] <= frame) seg = static_cast<int>(b);
    }
    return data.truth.segment_place[seg];
  };
  for (std::size_t q = 0; q < data.queries.size(); ++q) {
    const auto& spec = data.queries[q];
    const int rel = find_relevant_pair(data.map, spec.query_frame.pose, 400);
    CHECK(rel == spec.relevant_map_frame_id);
    const int anchor = insertion_point(data.map, spec.query_frame.pose);
    CHECK(path.between(anchor, rel) > 400);
    CHECK((anchor < lap) != (rel < lap));  // the other lap's view of the same place
    CHECK(place_of(rel) == place_of(data.truth.query_source_frame[q]));
  }
}

TEST_CASE("place selection") {
  PlacePartition one;
  one.regions = {{0, 9, 0}};
  CHECK(select_place(one, 5) == one.regions[0]);
  CHECK(select_place_random(one, 3, 17) == one.regions[0]);

  PlacePartition two;
  two.regions = {{0, 4, 0}, {4, 7, 4}};
  CHECK(select_place(two, 4).start == 4);

  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 300)(rng);
    const auto p = partition_time(n, std::uniform_int_distribution<int>(1, n)(rng));
    const int id = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const PlaceRegion* want = nullptr;
    for (const auto& r : p.regions) {
      if (id >= r.start && id < r.end) want = &r;
    }
    CHECK(select_place(p, id) == *want);
  }
}

TEST_CASE("random place selection is reproducible and uniform") {
  const auto p = partition_time(50, 5);
  std::vector<int> counts(5, 0);
  for (std::size_t q = 0; q < 10000; ++q) {
    const auto& r = select_place_random(p, 99, q);
    CHECK(r == select_place_random(p, 99, q));
    ++counts[p.region_index(r.start)];
  }
  const double sigma = std::sqrt(10000 * 0.2 * 0.8);
  for (int c : counts) CHECK(std::abs(c - 2000) <= 3 * sigma);
}

TEST_CASE("query rank") {
  FeatureSet fs;
  fs.descriptors = DescriptorMatrix(1);
  for (int i = 0; i < 40; ++i) fs.add({static_cast<double>(i), 1}, std::vector<float>{0});
  std::vector<RankedFeature> ranking;
  for (std::size_t i = 0; i < 40; ++i) ranking.push_back({i, 0.0, i + 1});
  const std::vector<GroundTruthBox> top{{0, 0, 0, 0.5, 2}};
  CHECK(query_rank(ranking, fs, top) == 1);
  const std::vector<GroundTruthBox> none{{0, 100, 0, 120, 2}};
  CHECK(query_rank(ranking, fs, none) == 41);
  const std::vector<GroundTruthBox> edge{{0, 39, 1, 45, 2}};
  CHECK(query_rank(ranking, fs, edge) == 40);  // boundary-inclusive

  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 100; ++trial) {
    FeatureSet g;
    g.descriptors = DescriptorMatrix(1);
    for (int i = 0; i < 50; ++i) g.add({u(rng), u(rng)}, std::vector<float>{0});
    std::vector<std::size_t> perm(50);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<RankedFeature> rk;
    for (std::size_t r = 0; r < 30; ++r) rk.push_back({perm[r], 0.0, r + 1});
    std::vector<GroundTruthBox> boxes;
    for (int b = 0; b < 2; ++b) {
      const double x = u(rng) * 0.8, y = u(rng) * 0.8;
      boxes.push_back({0, x, y, x + 15, y + 15});
    }
    std::size_t want = rk.size() + 1;
    for (const auto& r : rk) {
      const auto& kp = g.keypoints[r.feature_index];
      for (const auto& b : boxes) {
        if (kp.x >= b.x0 && kp.x <= b.x1 && kp.y >= b.y0 && kp.y <= b.y1) want = std::min(want, r.rank);
      }
    }
    CHECK(query_rank(rk, g, boxes) == want);
  }
}

TEST_CASE("pipeline at T_n = 0 equals the no-nuisance pipeline") {
  const auto& data = small_benchmark();
  const auto queries = data.query_frames();
  const auto boxes = data.boxes();
  const auto p = partition_time(static_cast<int>(data.map.size()), 6);
  PipelineOptions o;
  const auto with = train_place_models(data.map, data.experience, p, o.hyper, true);
  const auto without = train_place_models(data.map, data.experience, p, o.hyper, false);
  const auto a = evaluate_queries(data.map, with, queries, boxes, o);
  const auto b = evaluate_queries(data.map, without, queries, boxes, o);
  CHECK(a.per_query_ranks == b.per_query_ranks);
  CHECK(to_json(a) == to_json(b));
  CHECK(to_json(run_pipeline(data.map, data.experience, queries, boxes, p, o)) == to_json(b));
  o.tn = 20;
  CHECK_THROWS_AS(evaluate_queries(data.map, without, queries, boxes, o), ParameterError);
}

TEST_CASE("dense baseline accounting") {
  const auto& data = small_benchmark();
  const auto queries = data.query_frames();
  const auto boxes = data.boxes();
  const int n = static_cast<int>(data.map.size());
  PipelineOptions o;
  auto r = baseline_dense(data.map, data.experience, queries, boxes, n, o);
  CHECK(r.place_count == 1);
  CHECK(r.strategy == "dense");
  r = baseline_dense(data.map, data.experience, queries, boxes, 10, o);
  CHECK(r.place_count == static_cast<std::size_t>((n + 9) / 10));
  CHECK_THROWS_AS(baseline_dense(data.map, data.experience, queries, boxes, 0, o), ParameterError);
}

TEST_CASE("stride-1 baseline has one place per frame, all untrainable") {
  SynthConfig c;
  c.n_places = 1;
  c.frames_per_place = 4;
  c.features_per_frame = 10;
  c.n_queries = 2;
  c.experience_size = 20;
  const auto data = generate(c);
  const auto r = baseline_dense(data.map, data.experience, data.query_frames(), data.boxes(), 1, PipelineOptions{});
  CHECK(r.place_count == data.map.size());
  CHECK(r.untrainable_places == data.map.size());
  for (auto rank : r.per_query_ranks) CHECK(rank == 11);
}

TEST_CASE("untrainable region borrows the nearest trainable region") {
  const auto& data = small_benchmark();
  const int n = static_cast<int>(data.map.size());
  PlacePartition p;
  p.strategy = PartitionStrategy::Time;
  p.regions = {{0, 10, 0}, {10, 11, 10}, {11, 12, 11}, {12, n, 12}};
  const auto m = train_place_models(data.map, data.experience, p, {}, false);
  CHECK(m.untrainable == 2);
  CHECK(m.source[1] == std::optional<std::size_t>(0));
  CHECK(m.source[2] == std::optional<std::size_t>(3));
  CHECK(m.source[3] == std::optional<std::size_t>(3));
}

TEST_CASE("queries without a loop-closure partner are excluded") {
  const auto& data = small_benchmark();
  PipelineOptions o;
  o.min_path = 1e7;
  const auto r = run_pipeline(data.map, data.experience, data.query_frames(), data.boxes(),
                              partition_time(static_cast<int>(data.map.size()), 3), o);
  CHECK(r.per_query_ranks.empty());
  CHECK(r.excluded.size() == data.queries.size());
  CHECK(std::isnan(r.mean_rank));
  CHECK(to_json(r)["mean_rank"].is_null());
}

TEST_CASE("reports do not depend on the worker count") {
  const auto& data = small_benchmark();
  PipelineOptions o;
  o.tn = 30;
  const auto p = partition_time(static_cast<int>(data.map.size()), 6);
  set_worker_count(1);
  const auto a = run_pipeline(data.map, data.experience, data.query_frames(), data.boxes(), p, o);
  set_worker_count(8);
  const auto b = run_pipeline(data.map, data.experience, data.query_frames(), data.boxes(), p, o);
  set_worker_count(1);
  CHECK(to_json(a).dump() == to_json(b).dump());
}
