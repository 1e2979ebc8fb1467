#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pscd/evalharness.hpp"
#include "pscd/map_model.hpp"

namespace pscd {

enum class LoopGeometry { Loop, Line };

/// Synthetic view-sequence world.
///
/// Descriptor space is split into three blocks: a place block where each
/// place owns a cluster center (all centers on one sphere, pairwise at
/// least `cluster_separation` apart), a change block used only by change
/// objects, and a texture block carrying the energy of nuisance features.
///
/// Map frames hold stable features (the place's landmarks plus small
/// per-frame jitter, so successive frames match them) and ephemeral
/// features (a landmark displaced into the texture block; consecutive
/// frames use disjoint texture sub-bands so ephemerals never match).
/// Queries mirror a map frame: landmarks, change features inside the
/// ground-truth box, and free-floating texture nuisance that carries no
/// place content, which is where it overlaps the change cluster.
///
/// Loop geometry drives the place sequence twice around a closed circuit,
/// so every second-lap frame has a first-lap twin that is close in pose but
/// a whole lap away along the trajectory. Queries mirror second-lap frames.
struct SynthConfig {
  std::uint64_t seed = 0;
  int n_places = 3;
  int frames_per_place = 50;
  int features_per_frame = 100;
  int descriptor_dim = 16;
  double cluster_separation = 10.0;
  double intra_cluster_noise = 0.1;
  double stable_fraction = 0.4;
  int n_queries = 30;
  int change_features_per_query = 5;
  int image_width = 1024;
  int image_height = 768;
  LoopGeometry loop_geometry = LoopGeometry::Loop;
  /// Per-segment frame counts are frames_per_place * U(1 - v, 1 + v).
  double speed_variation = 0.0;
  int experience_size = 2000;
  /// Circuit length; must exceed the 400 m loop-closure condition.
  double circuit_length_m = 1200.0;

  /// Throws ConfigError.
  void validate() const;
};

nlohmann::json to_json(const SynthConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
SynthConfig synth_config_from_json(const nlohmann::json& j);

enum class FeatureLabel { Stable, Ephemeral, Change };
std::string to_string(FeatureLabel l);

struct PlantedTruth {
  std::vector<int> boundaries;     // first frame of every planted segment
  std::vector<int> segment_place;  // appearance cluster of each segment
  std::vector<std::vector<FeatureLabel>> map_labels;
  std::vector<std::vector<FeatureLabel>> query_labels;
  std::vector<int> query_source_frame;  // the map frame each query mirrors
};

struct SynthData {
  SynthConfig config;
  ViewSequenceMap map;
  ExperienceSet experience;
  std::vector<QuerySpec> queries;
  PlantedTruth truth;

  std::vector<Frame> query_frames() const;
  std::vector<GroundTruthBox> boxes() const;
};

SynthData generate(const SynthConfig& config);

nlohmann::json planted_truth_json(const SynthData& data);

/// Writes map.jsonl (+ map_desc/), queries.jsonl (+ query_desc/),
/// experience.psdf, ground_truth.jsonl and planted_truth.json under `dir`.
void write_synth(const SynthData& data, const std::filesystem::path& dir);

}  // namespace pscd
