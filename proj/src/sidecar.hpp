#pragma once

// Shared helpers for model sidecar files.

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "pscd/error.hpp"
#include "pscd/upd.hpp"

namespace pscd::detail {

inline std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  std::filesystem::path p = stem;
  p += suffix;
  return p;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline nlohmann::json region_meta(const PlaceRegion& r) {
  return {{"region", {r.start, r.end}}, {"keyframe_id", r.keyframe_id}};
}

inline PlaceRegion region_from(const nlohmann::json& meta) {
  const auto r = meta.at("region").get<std::vector<int>>();
  if (r.size() != 2) throw ParseError("sidecar region must be [start, end]");
  return {r[0], r[1], meta.value("keyframe_id", r[0])};
}

}  // namespace pscd::detail
