#include "pscd/anomaly.hpp"

#include <algorithm>
#include <numeric>

#include "pscd/error.hpp"
#include "pscd/kernels.hpp"
#include "pscd/map_io.hpp"
#include "sidecar.hpp"

namespace pscd {

using nlohmann::json;

DescriptorMatrix mine_pseudo_anomalies(const DescriptorMatrix& place_features,
                                       const DescriptorMatrix& donor_pool) {
  if (donor_pool.empty()) throw EmptyPoolError("anomaly mining: empty donor pool");
  if (place_features.empty()) return DescriptorMatrix(donor_pool.dim());
  if (place_features.dim() != donor_pool.dim()) {
    throw DimensionError("place feature dim " + std::to_string(place_features.dim()) +
                         " != donor dim " + std::to_string(donor_pool.dim()));
  }
  const auto far = kernels::farthest_l2(place_features, donor_pool);
  DescriptorMatrix out(donor_pool.dim());
  out.reserve(far.size());
  for (const auto& f : far) out.append(donor_pool.row(f.index));
  return out;
}

AnomalyModel train_anomaly(const DescriptorMatrix& place_features,
                           const DescriptorMatrix& pseudo_anomalies, const SvmHyper& hyper,
                           const PlaceRegion& place) {
  return {train_svm(pseudo_anomalies, place_features, hyper), place};
}

std::vector<RankedFeature> rank_changes(const AnomalyModel& model, const FeatureSet& query,
                                        std::span<const std::size_t> subset) {
  std::vector<RankedFeature> out;
  out.reserve(subset.size());
  for (std::size_t i : subset) {
    if (i >= query.size()) throw RangeError("rank_changes: feature index out of range");
    out.push_back({i, score(model.svm, query.descriptors.row(i)), 0});
  }
  std::sort(out.begin(), out.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.feature_index < b.feature_index;
  });
  for (std::size_t r = 0; r < out.size(); ++r) out[r].rank = r + 1;
  return out;
}

std::vector<RankedFeature> rank_changes(const AnomalyModel& model, const FeatureSet& query) {
  std::vector<std::size_t> all(query.size());
  std::iota(all.begin(), all.end(), 0);
  return rank_changes(model, query, all);
}

void save_anomaly(const std::filesystem::path& stem, const AnomalyModel& model) {
  save_svm(detail::with_suffix(stem, ".json"), model.svm);
  atomic_write(detail::with_suffix(stem, ".meta.json"),
               detail::region_meta(model.place).dump(2) + "\n");
}

AnomalyModel load_anomaly(const std::filesystem::path& stem) {
  AnomalyModel m;
  m.svm = load_svm(detail::with_suffix(stem, ".json"));
  try {
    m.place = detail::region_from(detail::read_json(detail::with_suffix(stem, ".meta.json")));
  } catch (const json::exception& e) {
    throw ParseError(std::string("anomaly sidecar: ") + e.what());
  }
  return m;
}

json ranking_to_json(int frame_id, const FeatureSet& query,
                     const std::vector<RankedFeature>& ranking) {
  json items = json::array();
  for (const auto& r : ranking) {
    const auto& kp = query.keypoints.at(r.feature_index);
    items.push_back({{"index", r.feature_index},
                     {"x", kp.x},
                     {"y", kp.y},
                     {"score", r.score},
                     {"rank", r.rank}});
  }
  return {{"frame_id", frame_id}, {"ranking", std::move(items)}};
}

}  // namespace pscd
