#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pscd/map_model.hpp"

namespace pscd {

/// Half-open frame interval [start, end) with the frame it was seeded from.
struct PlaceRegion {
  int start = 0;
  int end = 0;
  int keyframe_id = 0;

  int length() const { return end - start; }
  bool contains(int frame_id) const { return frame_id >= start && frame_id < end; }
  bool operator==(const PlaceRegion&) const = default;
};

enum class PartitionStrategy { Time, Appearance };

std::string to_string(PartitionStrategy s);
PartitionStrategy parse_strategy(const std::string& s);

struct PlacePartition {
  std::vector<PlaceRegion> regions;
  PartitionStrategy strategy = PartitionStrategy::Time;
  double param = 0.0;  // K for time, T_s for appearance

  std::size_t size() const { return regions.size(); }
  int frame_count() const { return regions.empty() ? 0 : regions.back().end; }

  /// Index of the region holding `frame_id`. Throws RangeError when outside.
  std::size_t region_index(int frame_id) const;

  bool operator==(const PlacePartition&) const = default;
};

/// Throws StructureError unless the regions are contiguous, non-empty,
/// keyframe-bearing and exactly cover [0, frame_count).
void validate_partition(const PlacePartition& p, int frame_count);

/// K contiguous regions of near-equal length; the first N mod K regions
/// take the extra frame. Keyframe = region start.
PlacePartition partition_time(int frame_count, int k);

/// Sequential keyframe scan. A frame stays in the current region while its
/// NBNN distance to the region's keyframe is below `ts`; otherwise it opens
/// a new region and becomes its keyframe.
///
/// Frames without features have distance 0 and always stay. A keyframe
/// without features (only possible for frame 0) is treated as infinitely
/// far from any frame that has features.
PlacePartition partition_appearance(const ViewSequenceMap& map, double ts);

/// JSON lines: header {"strategy","param"} (plus `header_extra` keys),
/// then {"start","end","keyframe_id"} per region.
void write_partition(const std::filesystem::path& path, const PlacePartition& p,
                     const nlohmann::json& header_extra = nlohmann::json::object());
PlacePartition load_partition(const std::filesystem::path& path);

}  // namespace pscd
