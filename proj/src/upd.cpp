#include "pscd/upd.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "pscd/error.hpp"
#include "pscd/map_io.hpp"
#include "pscd/matching.hpp"

namespace pscd {

using nlohmann::json;

std::string to_string(PartitionStrategy s) {
  return s == PartitionStrategy::Time ? "time" : "appearance";
}

PartitionStrategy parse_strategy(const std::string& s) {
  if (s == "time") return PartitionStrategy::Time;
  if (s == "appearance") return PartitionStrategy::Appearance;
  throw ParameterError("unknown partition strategy \"" + s + "\"");
}

std::size_t PlacePartition::region_index(int frame_id) const {
  // Regions are sorted and contiguous: binary search on start.
  std::size_t lo = 0, hi = regions.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (regions[mid].end <= frame_id) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo == regions.size() || !regions[lo].contains(frame_id)) {
    throw RangeError("frame " + std::to_string(frame_id) + " not covered by partition");
  }
  return lo;
}

void validate_partition(const PlacePartition& p, int frame_count) {
  if (p.regions.empty()) throw StructureError("partition has no regions");
  int expect = 0;
  for (std::size_t k = 0; k < p.regions.size(); ++k) {
    const auto& r = p.regions[k];
    if (r.start != expect) {
      throw StructureError("region " + std::to_string(k) + " starts at " +
                           std::to_string(r.start) + ", expected " + std::to_string(expect));
    }
    if (r.end <= r.start) throw StructureError("region " + std::to_string(k) + " is empty");
    if (!r.contains(r.keyframe_id)) {
      throw StructureError("region " + std::to_string(k) + " keyframe outside region");
    }
    expect = r.end;
  }
  if (expect != frame_count) {
    throw StructureError("partition covers " + std::to_string(expect) + " frames, map has " +
                         std::to_string(frame_count));
  }
}

PlacePartition partition_time(int frame_count, int k) {
  if (frame_count < 1) throw ParameterError("partition_time: frame_count must be >= 1");
  if (k < 1 || k > frame_count) {
    throw ParameterError("partition_time: K=" + std::to_string(k) + " outside [1, " +
                         std::to_string(frame_count) + "]");
  }
  PlacePartition p;
  p.strategy = PartitionStrategy::Time;
  p.param = k;
  p.regions.reserve(static_cast<std::size_t>(k));
  const int base = frame_count / k;
  const int extra = frame_count % k;
  int start = 0;
  for (int r = 0; r < k; ++r) {
    const int len = base + (r < extra ? 1 : 0);
    p.regions.push_back({start, start + len, start});
    start += len;
  }
  return p;
}

PlacePartition partition_appearance(const ViewSequenceMap& map, double ts) {
  if (map.frames.empty()) throw ParameterError("partition_appearance: empty map");
  if (!(ts > 0.0)) throw ParameterError("partition_appearance: T_s must be > 0");
  PlacePartition p;
  p.strategy = PartitionStrategy::Appearance;
  p.param = ts;

  const int n = static_cast<int>(map.frames.size());
  int start = 0;
  int keyframe = 0;
  for (int f = 1; f < n; ++f) {
    const auto& query = map.frames[f].features.descriptors;
    const auto& key = map.frames[keyframe].features.descriptors;
    double d = 0.0;
    if (!query.empty()) {
      d = key.empty() ? std::numeric_limits<double>::infinity() : nbnn_image_to_class(query, key);
    }
    if (d < ts) continue;
    p.regions.push_back({start, f, keyframe});
    start = f;
    keyframe = f;
  }
  p.regions.push_back({start, n, keyframe});
  return p;
}

void write_partition(const std::filesystem::path& path, const PlacePartition& p,
                     const json& header_extra) {
  json header = header_extra.is_object() ? header_extra : json::object();
  header["strategy"] = to_string(p.strategy);
  header["param"] = p.param;
  std::string text = header.dump() + "\n";
  for (const auto& r : p.regions) {
    text += json{{"start", r.start}, {"end", r.end}, {"keyframe_id", r.keyframe_id}}.dump() + "\n";
  }
  atomic_write(path, text);
}

PlacePartition load_partition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  PlacePartition p;
  bool have_header = false;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        p.strategy = parse_strategy(j.at("strategy").get<std::string>());
        p.param = j.at("param").get<double>();
        have_header = true;
        continue;
      }
      p.regions.push_back({j.at("start").get<int>(), j.at("end").get<int>(),
                           j.at("keyframe_id").get<int>()});
    } catch (const json::exception& e) {
      throw ParseError(std::string("partition file: ") + e.what(), lineno);
    }
  }
  if (!have_header) throw ParseError("partition file has no header");
  validate_partition(p, p.frame_count());
  return p;
}

}  // namespace pscd
