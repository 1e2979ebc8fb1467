#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "pscd/linsvm.hpp"
#include "pscd/map_model.hpp"
#include "pscd/upd.hpp"

namespace pscd {

/// Place-specific change classifier. Higher score = more likely change.
struct AnomalyModel {
  SvmModel svm;
  PlaceRegion place;
  bool operator==(const AnomalyModel&) const = default;
};

struct RankedFeature {
  std::size_t feature_index = 0;  // into the query frame's feature list
  double score = 0.0;
  std::size_t rank = 0;           // 1-based
  bool operator==(const RankedFeature&) const = default;
};

/// Pseudo-anomalies for a place: for every place descriptor, the donor
/// descriptor farthest from it in L2 (lowest index on ties). Donors are
/// descriptors drawn from the other places of the map.
/// Throws EmptyPoolError on an empty donor pool.
DescriptorMatrix mine_pseudo_anomalies(const DescriptorMatrix& place_features,
                                       const DescriptorMatrix& donor_pool);

/// Place features are the negative (no-change) class, pseudo-anomalies the
/// positive class.
AnomalyModel train_anomaly(const DescriptorMatrix& place_features,
                           const DescriptorMatrix& pseudo_anomalies, const SvmHyper& hyper,
                           const PlaceRegion& place = {});

/// Scores and ranks every query feature (descending, ties by index).
std::vector<RankedFeature> rank_changes(const AnomalyModel& model, const FeatureSet& query);

/// Ranks only `subset` (indices into `query`), e.g. the features kept by
/// the nuisance filter. feature_index still refers to `query`.
std::vector<RankedFeature> rank_changes(const AnomalyModel& model, const FeatureSet& query,
                                        std::span<const std::size_t> subset);

/// `<stem>.json` (linsvm model) plus `<stem>.meta.json` {"region":[start,end]}.
void save_anomaly(const std::filesystem::path& stem, const AnomalyModel& model);
AnomalyModel load_anomaly(const std::filesystem::path& stem);

/// Ranked output line: {"frame_id", "ranking":[{"index","x","y","score","rank"},...]}.
nlohmann::json ranking_to_json(int frame_id, const FeatureSet& query,
                               const std::vector<RankedFeature>& ranking);

}  // namespace pscd
