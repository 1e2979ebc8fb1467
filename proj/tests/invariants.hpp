#pragma once

#include <limits>
#include <string>

#include "oracles.hpp"
#include "pscd/upd.hpp"
#include "support.hpp"

namespace testing {

/// Cover, contiguity and length rules of a partition; empty string if all hold.
inline std::string partition_violation(const pscd::PlacePartition& p, int n) {
  if (p.regions.empty()) return "no regions";
  int expect = 0;
  for (const auto& r : p.regions) {
    if (r.start != expect) return "gap or overlap at " + std::to_string(r.start);
    if (r.end <= r.start) return "empty region at " + std::to_string(r.start);
    if (r.keyframe_id < r.start || r.keyframe_id >= r.end) return "keyframe outside region";
    expect = r.end;
  }
  if (expect != n) return "does not cover the map";
  return "";
}

inline double oracle_frame_distance(const pscd::Frame& f, const pscd::Frame& key) {
  if (f.features.empty()) return 0.0;
  if (key.features.empty()) return std::numeric_limits<double>::infinity();
  return oracle::nbnn(rows(f.features.descriptors), rows(key.features.descriptors));
}

/// Keyframe rule re-checked after the fact: every member of a region is
/// closer than T_s to its keyframe (which is the region's first frame),
/// and every region start is at least T_s from the previous keyframe.
inline std::string keyframe_violation(const pscd::PlacePartition& p, const pscd::ViewSequenceMap& m,
                                      double ts) {
  for (std::size_t r = 0; r < p.regions.size(); ++r) {
    const auto& reg = p.regions[r];
    if (reg.keyframe_id != reg.start) return "keyframe is not the first frame";
    for (int f = reg.start + 1; f < reg.end; ++f) {
      if (!(oracle_frame_distance(m.frames[f], m.frames[reg.keyframe_id]) < ts)) {
        return "frame " + std::to_string(f) + " too far from its keyframe";
      }
    }
    if (r > 0) {
      const auto& prev = p.regions[r - 1];
      if (oracle_frame_distance(m.frames[reg.start], m.frames[prev.keyframe_id]) < ts) {
        return "region " + std::to_string(r) + " should have joined its predecessor";
      }
    }
  }
  return "";
}

}  // namespace testing
