#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pscd/map_model.hpp"

namespace pscd {

namespace fs = std::filesystem;

/// Writes `contents` to a sibling temp file, then renames it over `path`.
/// Readers never observe a partially written file.
void atomic_write(const fs::path& path, std::string_view contents);

// Descriptor blob: "PSDF", u32 count, u32 dim, count*dim little-endian f32.
DescriptorMatrix read_descriptor_blob(const fs::path& path);
void write_descriptor_blob(const fs::path& path, const DescriptorMatrix& descriptors);
std::string encode_descriptor_blob(const DescriptorMatrix& descriptors);
DescriptorMatrix decode_descriptor_blob(std::string_view bytes, const std::string& origin);

/// Loads a frame manifest (JSON lines: header, then one frame per line).
/// Descriptor files are resolved relative to the manifest's directory.
ViewSequenceMap load_map(const fs::path& manifest);

/// Writes a manifest plus one descriptor blob per frame under
/// `<manifest dir>/<blob_dir>/`. `header_extra` keys are merged into the
/// header line (used to record the producing configuration).
void write_map(const ViewSequenceMap& map, const fs::path& manifest, const std::string& blob_dir,
               const nlohmann::json& header_extra = nlohmann::json::object());

/// Ground truth: JSON lines {"frame_id", "box":[x0,y0,x1,y1]}. Lines
/// carrying a "header" key are skipped.
std::vector<GroundTruthBox> load_ground_truth(const fs::path& path);
void write_ground_truth(const fs::path& path, const std::vector<GroundTruthBox>& boxes,
                        const nlohmann::json& header = nlohmann::json());

ExperienceSet load_experience(const fs::path& path);
void write_experience(const fs::path& path, const ExperienceSet& experience);

}  // namespace pscd
