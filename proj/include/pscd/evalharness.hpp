#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pscd/anomaly.hpp"
#include "pscd/linsvm.hpp"
#include "pscd/map_model.hpp"
#include "pscd/nuisance.hpp"
#include "pscd/upd.hpp"

namespace pscd {

/// A query frame paired with its relevant map frame and annotations.
struct QuerySpec {
  Frame query_frame;
  int relevant_map_frame_id = -1;
  std::vector<GroundTruthBox> gt_boxes;
};

/// The pose-nearest map frame, ignoring the traveled-distance condition
/// (lowest id on ties). Used as the query's position along the trajectory.
int insertion_point(const ViewSequenceMap& map, const Pose2& query_pose);

/// Among map frames whose traveled distance from the query's insertion
/// point exceeds `min_path` (any frame when min_path <= 0), the one closest
/// in pose to the query; lowest id on ties.
/// Throws NoRelevantPairError when no frame qualifies.
int find_relevant_pair(const ViewSequenceMap& map, const Pose2& query_pose, double min_path);
int find_relevant_pair(const ViewSequenceMap& map, const CumulativePath& path,
                       const Pose2& query_pose, double min_path);

const PlaceRegion& select_place(const PlacePartition& partition, int relevant_frame_id);

/// Uniform over regions, reproducible per (seed, query_index).
const PlaceRegion& select_place_random(const PlacePartition& partition, std::uint64_t seed,
                                       std::size_t query_index);

/// Best (minimum) rank among ranked features lying inside any box
/// (boundary-inclusive). Returns ranking.size() + 1 when none does.
std::size_t query_rank(std::span<const RankedFeature> ranking, const FeatureSet& features,
                       std::span<const GroundTruthBox> boxes);

enum class PlaceSelection { Relevant, Random };

struct PipelineOptions {
  double tn = 0.0;                 // nuisance cut, percent
  SvmHyper hyper;                  // per-place seeds are hyper.seed + region index
  double min_path = 400.0;         // loop-closure traveled-distance condition, meters
  PlaceSelection selection = PlaceSelection::Relevant;
  std::uint64_t seed = 0;          // random place selection
};

/// Per-place predictors for one partition. Regions whose harvest is empty
/// borrow the models of the nearest trainable region by index (lower index
/// on ties); `source[r]` names the region whose models serve region r.
struct PlaceModels {
  PlacePartition partition;
  std::vector<std::optional<AnomalyModel>> anomaly;
  std::vector<std::optional<NuisanceModel>> nuisance;
  std::vector<std::optional<std::size_t>> source;
  std::size_t untrainable = 0;
  bool with_nuisance = false;
};

/// Trains anomaly (and, if requested, nuisance) models for every region.
/// Anomaly donors are the harvested descriptors of all other regions; a
/// partition with no other harvest falls back to the experience set.
PlaceModels train_place_models(const ViewSequenceMap& map, const ExperienceSet& experience,
                               const PlacePartition& partition, const SvmHyper& hyper,
                               bool with_nuisance);

struct ExcludedQuery {
  int query_id = 0;
  std::string reason;
};

struct EvalReport {
  std::vector<int> query_ids;
  std::vector<std::size_t> per_query_ranks;
  double mean_rank = 0.0;
  std::size_t place_count = 0;
  std::string strategy;
  double strategy_param = 0.0;
  double tn = 0.0;
  std::uint64_t seed = 0;
  std::string selection;
  std::size_t untrainable_places = 0;
  std::vector<ExcludedQuery> excluded;
};

/// Per query: resolve the relevant frame, select a place, filter nuisance
/// at options.tn, rank the kept features and score against the query's
/// boxes (boxes are matched to queries by frame_id = query frame id).
EvalReport evaluate_queries(const ViewSequenceMap& map, const PlaceModels& models,
                            std::span<const Frame> queries,
                            std::span<const GroundTruthBox> boxes, const PipelineOptions& options);

/// Trains per-place models on `partition`, then evaluate_queries.
EvalReport run_pipeline(const ViewSequenceMap& map, const ExperienceSet& experience,
                        std::span<const Frame> queries, std::span<const GroundTruthBox> boxes,
                        const PlacePartition& partition, const PipelineOptions& options);

/// One anomaly predictor per `stride` frames, no nuisance filtering.
EvalReport baseline_dense(const ViewSequenceMap& map, const ExperienceSet& experience,
                          std::span<const Frame> queries, std::span<const GroundTruthBox> boxes,
                          int stride, const PipelineOptions& options);

nlohmann::json to_json(const EvalReport& report);

}  // namespace pscd
