#include "pscd/evalharness.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <random>

#include "pscd/error.hpp"

namespace pscd {

using nlohmann::json;

int insertion_point(const ViewSequenceMap& map, const Pose2& query_pose) {
  if (map.frames.empty()) throw ParameterError("insertion_point: empty map");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& f : map.frames) {
    const double d = euclidean(f.pose, query_pose);
    if (d < best_d) {
      best_d = d;
      best = f.id;
    }
  }
  return best;
}

int find_relevant_pair(const ViewSequenceMap& map, const CumulativePath& path,
                       const Pose2& query_pose, double min_path) {
  const int anchor = insertion_point(map, query_pose);
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& f : map.frames) {
    if (min_path > 0.0 && !(path.between(anchor, f.id) > min_path)) continue;
    const double d = euclidean(f.pose, query_pose);
    if (d < best_d) {
      best_d = d;
      best = f.id;
    }
  }
  if (best < 0) {
    throw NoRelevantPairError("no map frame lies more than " + std::to_string(min_path) +
                              " m along the trajectory from frame " + std::to_string(anchor));
  }
  return best;
}

int find_relevant_pair(const ViewSequenceMap& map, const Pose2& query_pose, double min_path) {
  return find_relevant_pair(map, CumulativePath(map), query_pose, min_path);
}

const PlaceRegion& select_place(const PlacePartition& partition, int relevant_frame_id) {
  return partition.regions[partition.region_index(relevant_frame_id)];
}

const PlaceRegion& select_place_random(const PlacePartition& partition, std::uint64_t seed,
                                       std::size_t query_index) {
  if (partition.regions.empty()) throw StructureError("partition has no regions");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(query_index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(query_index) >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, partition.regions.size() - 1);
  return partition.regions[pick(rng)];
}

std::size_t query_rank(std::span<const RankedFeature> ranking, const FeatureSet& features,
                       std::span<const GroundTruthBox> boxes) {
  std::size_t best = ranking.size() + 1;
  for (const auto& r : ranking) {
    const auto& kp = features.keypoints.at(r.feature_index);
    for (const auto& b : boxes) {
      if (b.contains(kp)) {
        best = std::min(best, r.rank);
        break;
      }
    }
  }
  return best;
}

namespace {

SvmHyper place_hyper(const SvmHyper& base, std::size_t region) {
  SvmHyper h = base;
  h.seed = base.seed + region;
  return h;
}

// Rethrows the first captured exception in region order.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

PlaceModels train_place_models(const ViewSequenceMap& map, const ExperienceSet& experience,
                               const PlacePartition& partition, const SvmHyper& hyper,
                               bool with_nuisance) {
  validate_partition(partition, static_cast<int>(map.frames.size()));
  hyper.validate();
  const std::size_t nr = partition.regions.size();
  const auto nr_signed = static_cast<std::ptrdiff_t>(nr);

  PlaceModels out;
  out.partition = partition;
  out.with_nuisance = with_nuisance;
  out.anomaly.resize(nr);
  out.nuisance.resize(nr);
  out.source.resize(nr);

  std::vector<DescriptorMatrix> harvest(nr);
  std::vector<std::exception_ptr> errors(nr);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < nr_signed; ++r) {
    try {
      harvest[r] = harvest_non_nuisance(map, partition.regions[r]);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  rethrow_first(errors);

  std::size_t total = 0;
  for (const auto& h : harvest) total += h.rows();

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < nr_signed; ++r) {
    if (harvest[r].empty()) continue;
    try {
      const auto& region = partition.regions[r];
      const SvmHyper h = place_hyper(hyper, static_cast<std::size_t>(r));
      DescriptorMatrix donors(map.descriptor_dim);
      donors.reserve(total - harvest[r].rows());
      for (std::ptrdiff_t o = 0; o < nr_signed; ++o) {
        if (o != r) donors.append_rows(harvest[o]);
      }
      const DescriptorMatrix& pool = donors.empty() ? experience.descriptors : donors;
      const auto mined = mine_pseudo_anomalies(harvest[r], pool);
      out.anomaly[r] = train_anomaly(harvest[r], mined, h, region);
      if (with_nuisance) out.nuisance[r] = train_nuisance(harvest[r], region, experience, h);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  rethrow_first(errors);

  for (std::size_t r = 0; r < nr; ++r) {
    if (out.anomaly[r]) {
      out.source[r] = r;
      continue;
    }
    ++out.untrainable;
    for (std::size_t step = 1; step < nr; ++step) {
      if (step <= r && out.anomaly[r - step]) {
        out.source[r] = r - step;
        break;
      }
      if (r + step < nr && out.anomaly[r + step]) {
        out.source[r] = r + step;
        break;
      }
    }
  }
  return out;
}

namespace {

std::string selection_name(PlaceSelection s) {
  return s == PlaceSelection::Relevant ? "relevant" : "random";
}

struct QueryOutcome {
  bool excluded = false;
  std::string reason;
  std::size_t rank = 0;
};

}  // namespace

EvalReport evaluate_queries(const ViewSequenceMap& map, const PlaceModels& models,
                            std::span<const Frame> queries,
                            std::span<const GroundTruthBox> boxes,
                            const PipelineOptions& options) {
  nuisance_cut(options.tn, 0);  // validates the range
  if (options.tn > 0.0 && !models.with_nuisance) {
    throw ParameterError("T_n > 0 needs models trained with nuisance predictors");
  }
  const CumulativePath path(map);
  std::map<int, std::vector<GroundTruthBox>> by_frame;
  for (const auto& b : boxes) by_frame[b.frame_id].push_back(b);

  const auto nq = static_cast<std::ptrdiff_t>(queries.size());
  std::vector<QueryOutcome> outcome(queries.size());
  std::vector<std::exception_ptr> errors(queries.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t qi = 0; qi < nq; ++qi) {
    try {
      const Frame& q = queries[qi];
      int relevant = 0;
      try {
        relevant = find_relevant_pair(map, path, q.pose, options.min_path);
      } catch (const NoRelevantPairError& e) {
        outcome[qi] = {true, e.what(), 0};
        continue;
      }
      const std::size_t region =
          options.selection == PlaceSelection::Relevant
              ? models.partition.region_index(relevant)
              : models.partition.region_index(
                    select_place_random(models.partition, options.seed,
                                        static_cast<std::size_t>(qi))
                        .start);
      auto it = by_frame.find(q.id);
      const std::span<const GroundTruthBox> qboxes =
          it == by_frame.end() ? std::span<const GroundTruthBox>() : it->second;

      const auto src = models.source[region];
      if (!src) {
        // No trainable place anywhere: nothing can be ranked.
        outcome[qi].rank = q.features.size() + 1;
        continue;
      }
      FilterResult filtered;
      if (options.tn > 0.0) {
        filtered = filter_nuisance(*models.nuisance[*src], q.features, options.tn);
      } else {
        filtered.kept.resize(q.features.size());
        for (std::size_t i = 0; i < filtered.kept.size(); ++i) filtered.kept[i] = i;
      }
      const auto ranking = rank_changes(*models.anomaly[*src], q.features, filtered.kept);
      outcome[qi].rank = query_rank(ranking, q.features, qboxes);
    } catch (...) {
      errors[qi] = std::current_exception();
    }
  }
  rethrow_first(errors);

  EvalReport rep;
  rep.place_count = models.partition.regions.size();
  rep.strategy = to_string(models.partition.strategy);
  rep.strategy_param = models.partition.param;
  rep.tn = options.tn;
  rep.seed = options.seed;
  rep.selection = selection_name(options.selection);
  rep.untrainable_places = models.untrainable;
  double sum = 0.0;
  for (std::size_t qi = 0; qi < outcome.size(); ++qi) {
    if (outcome[qi].excluded) {
      rep.excluded.push_back({queries[qi].id, outcome[qi].reason});
      continue;
    }
    rep.query_ids.push_back(queries[qi].id);
    rep.per_query_ranks.push_back(outcome[qi].rank);
    sum += static_cast<double>(outcome[qi].rank);
  }
  rep.mean_rank = rep.per_query_ranks.empty()
                      ? std::numeric_limits<double>::quiet_NaN()
                      : sum / static_cast<double>(rep.per_query_ranks.size());
  return rep;
}

EvalReport run_pipeline(const ViewSequenceMap& map, const ExperienceSet& experience,
                        std::span<const Frame> queries, std::span<const GroundTruthBox> boxes,
                        const PlacePartition& partition, const PipelineOptions& options) {
  const auto models =
      train_place_models(map, experience, partition, options.hyper, options.tn > 0.0);
  return evaluate_queries(map, models, queries, boxes, options);
}

EvalReport baseline_dense(const ViewSequenceMap& map, const ExperienceSet& experience,
                          std::span<const Frame> queries, std::span<const GroundTruthBox> boxes,
                          int stride, const PipelineOptions& options) {
  if (stride < 1) throw ParameterError("baseline stride must be >= 1");
  const int n = static_cast<int>(map.frames.size());
  const int k = (n + stride - 1) / stride;
  PipelineOptions opts = options;
  opts.tn = 0.0;
  auto rep = run_pipeline(map, experience, queries, boxes, partition_time(n, k), opts);
  rep.strategy = "dense";
  rep.strategy_param = stride;
  return rep;
}

json to_json(const EvalReport& r) {
  json excluded = json::array();
  for (const auto& e : r.excluded) excluded.push_back({{"query_id", e.query_id}, {"reason", e.reason}});
  json mean = std::isfinite(r.mean_rank) ? json(r.mean_rank) : json(nullptr);
  return {{"per_query_ranks", r.per_query_ranks},
          {"query_ids", r.query_ids},
          {"mean_rank", mean},
          {"place_count", r.place_count},
          {"params",
           {{"strategy", r.strategy},
            {"param", r.strategy_param},
            {"tn", r.tn},
            {"seed", r.seed},
            {"selection", r.selection}}},
          {"untrainable_places", r.untrainable_places},
          {"excluded", std::move(excluded)}};
}

}  // namespace pscd
