#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "pscd/linsvm.hpp"
#include "pscd/map_model.hpp"
#include "pscd/upd.hpp"

namespace pscd {

struct MiningStats {
  std::size_t negatives_count = 0;
  std::size_t mined_count = 0;
  bool operator==(const MiningStats&) const = default;
};

/// Place-specific single-view nuisance classifier. Higher score = more
/// likely nuisance.
struct NuisanceModel {
  SvmModel svm;
  PlaceRegion place;
  MiningStats stats;
  bool operator==(const NuisanceModel&) const = default;
};

/// Query-side descriptors of every mutual match between consecutive frames
/// (k, k+1) inside `region`, concatenated in frame order. A one-frame
/// region has no pairs and yields an empty matrix.
DescriptorMatrix harvest_non_nuisance(const ViewSequenceMap& map, const PlaceRegion& region);

/// For each negative q, the experience descriptor farthest from q in L2
/// (lowest index on ties). Output rows align with `negatives`.
/// Throws EmptyPoolError on an empty experience set.
DescriptorMatrix mine_pseudo_positives(const DescriptorMatrix& negatives,
                                       const ExperienceSet& experience);

/// Harvests, mines and trains. Throws UntrainablePlaceError when the
/// harvest is empty.
NuisanceModel train_nuisance(const ViewSequenceMap& map, const PlaceRegion& region,
                             const ExperienceSet& experience, const SvmHyper& hyper);

/// Same, with the harvest already computed.
NuisanceModel train_nuisance(const DescriptorMatrix& harvested, const PlaceRegion& region,
                             const ExperienceSet& experience, const SvmHyper& hyper);

/// Indices into the filtered feature list, each part in original order.
struct FilterResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
};

/// Number of features a T_n% cut removes from m features: floor(T_n * m / 100).
std::size_t nuisance_cut(double tn_percent, std::size_t m);

/// Ranks features by descending nuisance score (ties by index) and removes
/// the first nuisance_cut(tn_percent, M). Throws ParameterError unless
/// 0 <= tn_percent <= 100.
FilterResult filter_nuisance(const NuisanceModel& model, const FeatureSet& features,
                             double tn_percent);

/// Writes `<stem>.json` (linsvm model) and `<stem>.meta.json`
/// {"region":[start,end], "mined_count", "negatives_count"}.
void save_nuisance(const std::filesystem::path& stem, const NuisanceModel& model);
NuisanceModel load_nuisance(const std::filesystem::path& stem);

}  // namespace pscd
