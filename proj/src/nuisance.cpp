#include "pscd/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pscd/error.hpp"
#include "pscd/map_io.hpp"
#include "pscd/matching.hpp"
#include "sidecar.hpp"

namespace pscd {

using nlohmann::json;

DescriptorMatrix harvest_non_nuisance(const ViewSequenceMap& map, const PlaceRegion& region) {
  const int n = static_cast<int>(map.frames.size());
  if (region.start < 0 || region.end > n || region.start >= region.end) {
    throw RangeError("region [" + std::to_string(region.start) + ", " +
                     std::to_string(region.end) + ") invalid for a map of " + std::to_string(n) +
                     " frames");
  }
  DescriptorMatrix out(map.descriptor_dim);
  for (int k = region.start; k + 1 < region.end; ++k) {
    const auto& a = map.frames[k].features.descriptors;
    const auto& b = map.frames[k + 1].features.descriptors;
    for (const auto& m : mutual_matches(a, b)) out.append(a.row(m.query_index));
  }
  return out;
}

DescriptorMatrix mine_pseudo_positives(const DescriptorMatrix& negatives,
                                       const ExperienceSet& experience) {
  const auto& pool = experience.descriptors;
  if (pool.empty()) throw EmptyPoolError("nuisance mining: empty experience set");
  if (negatives.empty()) return DescriptorMatrix(pool.dim());
  if (negatives.dim() != pool.dim()) {
    throw DimensionError("negatives dim " + std::to_string(negatives.dim()) +
                         " != experience dim " + std::to_string(pool.dim()));
  }
  const auto far = kernels::farthest_l2(negatives, pool);
  DescriptorMatrix out(pool.dim());
  out.reserve(far.size());
  for (const auto& f : far) out.append(pool.row(f.index));
  return out;
}

NuisanceModel train_nuisance(const DescriptorMatrix& harvested, const PlaceRegion& region,
                             const ExperienceSet& experience, const SvmHyper& hyper) {
  if (harvested.empty()) {
    throw UntrainablePlaceError("region [" + std::to_string(region.start) + ", " +
                                std::to_string(region.end) + ") has no matched features");
  }
  const auto mined = mine_pseudo_positives(harvested, experience);
  NuisanceModel m;
  m.svm = train_svm(mined, harvested, hyper);
  m.place = region;
  m.stats = {harvested.rows(), mined.rows()};
  return m;
}

NuisanceModel train_nuisance(const ViewSequenceMap& map, const PlaceRegion& region,
                             const ExperienceSet& experience, const SvmHyper& hyper) {
  return train_nuisance(harvest_non_nuisance(map, region), region, experience, hyper);
}

std::size_t nuisance_cut(double tn_percent, std::size_t m) {
  if (!(tn_percent >= 0.0 && tn_percent <= 100.0)) {
    throw ParameterError("T_n must lie in [0, 100], got " + std::to_string(tn_percent));
  }
  const double cut = std::floor(tn_percent * static_cast<double>(m) / 100.0);
  return std::min(m, static_cast<std::size_t>(cut));
}

FilterResult filter_nuisance(const NuisanceModel& model, const FeatureSet& features,
                             double tn_percent) {
  const std::size_t m = features.size();
  const std::size_t cut = nuisance_cut(tn_percent, m);
  FilterResult out;
  if (cut == 0) {
    out.kept.resize(m);
    std::iota(out.kept.begin(), out.kept.end(), 0);
    return out;
  }
  const auto order = rank_by_score(model.svm, features.descriptors);
  std::vector<bool> drop(m, false);
  for (std::size_t r = 0; r < cut; ++r) drop[order[r]] = true;
  for (std::size_t i = 0; i < m; ++i) (drop[i] ? out.removed : out.kept).push_back(i);
  return out;
}

void save_nuisance(const std::filesystem::path& stem, const NuisanceModel& model) {
  save_svm(detail::with_suffix(stem, ".json"), model.svm);
  json meta = detail::region_meta(model.place);
  meta["mined_count"] = model.stats.mined_count;
  meta["negatives_count"] = model.stats.negatives_count;
  atomic_write(detail::with_suffix(stem, ".meta.json"), meta.dump(2) + "\n");
}

NuisanceModel load_nuisance(const std::filesystem::path& stem) {
  NuisanceModel m;
  m.svm = load_svm(detail::with_suffix(stem, ".json"));
  const json meta = detail::read_json(detail::with_suffix(stem, ".meta.json"));
  try {
    m.place = detail::region_from(meta);
    m.stats.mined_count = meta.at("mined_count").get<std::size_t>();
    m.stats.negatives_count = meta.at("negatives_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("nuisance sidecar: ") + e.what());
  }
  return m;
}

}  // namespace pscd
