#include "pscd/map_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pscd/error.hpp"

namespace pscd {

using nlohmann::json;

void atomic_write(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " into place");
  }
}

namespace {

constexpr char kMagic[4] = {'P', 'S', 'D', 'F'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

json parse_line(const std::string& line, std::size_t lineno) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ParseError("expected a JSON object", lineno);
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
  }
}

template <typename T>
T require(const json& j, const char* key, std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key \"") + key + "\"", lineno);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("bad value for \"") + key + "\"", lineno);
  }
}

std::string blob_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.psdf", id);
  return buf;
}

}  // namespace

std::string encode_descriptor_blob(const DescriptorMatrix& d) {
  std::string out;
  out.reserve(12 + d.data().size() * 4);
  out.append(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(d.rows()));
  put_u32(out, static_cast<std::uint32_t>(d.dim()));
  for (float v : d.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

DescriptorMatrix decode_descriptor_blob(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError(origin + ": not a PSDF descriptor blob");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t count = get_u32(p + 4);
  const std::uint64_t dim = get_u32(p + 8);
  if (bytes.size() != 12 + count * dim * 4) {
    throw ParseError(origin + ": blob size does not match header " + std::to_string(count) +
                     "x" + std::to_string(dim));
  }
  std::vector<float> data(count * dim);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = std::bit_cast<float>(get_u32(p + 12 + 4 * k));
  }
  return DescriptorMatrix(dim, std::move(data));
}

DescriptorMatrix read_descriptor_blob(const fs::path& path) {
  return decode_descriptor_blob(read_file(path), path.string());
}

void write_descriptor_blob(const fs::path& path, const DescriptorMatrix& d) {
  atomic_write(path, encode_descriptor_blob(d));
}

ViewSequenceMap load_map(const fs::path& manifest) {
  const auto lines = read_lines(manifest);
  const fs::path base = manifest.parent_path();
  ViewSequenceMap map;
  bool have_header = false;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::size_t lineno = k + 1;
    if (blank(lines[k])) continue;
    const json j = parse_line(lines[k], lineno);
    if (!have_header) {
      const auto dim = require<long long>(j, "descriptor_dim", lineno);
      if (dim < 1) throw DimensionError("descriptor_dim must be >= 1");
      map.descriptor_dim = static_cast<std::size_t>(dim);
      map.image_width = require<int>(j, "image_width", lineno);
      map.image_height = require<int>(j, "image_height", lineno);
      have_header = true;
      continue;
    }
    Frame f;
    f.id = require<int>(j, "id", lineno);
    f.timestamp = require<double>(j, "timestamp", lineno);
    const auto pose = require<std::vector<double>>(j, "pose", lineno);
    if (pose.size() != 2) throw ParseError("pose must be [x, y]", lineno);
    f.pose = {pose[0], pose[1]};
    const auto kps = require<std::vector<std::vector<double>>>(j, "keypoints", lineno);
    f.features.keypoints.reserve(kps.size());
    for (const auto& kp : kps) {
      if (kp.size() != 2) throw ParseError("keypoint must be [x, y]", lineno);
      f.features.keypoints.push_back({kp[0], kp[1]});
    }
    const auto file = require<std::string>(j, "descriptor_file", lineno);
    DescriptorMatrix d = read_descriptor_blob(base / file);
    if (d.dim() != map.descriptor_dim && !(d.empty() && kps.empty())) {
      throw DimensionError("frame " + std::to_string(f.id) + ": descriptor dim " +
                           std::to_string(d.dim()) + " != dataset dim " +
                           std::to_string(map.descriptor_dim));
    }
    if (d.empty()) d = DescriptorMatrix(map.descriptor_dim);
    f.features.descriptors = std::move(d);
    if (static_cast<std::size_t>(f.id) != map.frames.size()) {
      throw StructureError("non-consecutive frame id " + std::to_string(f.id) + " at line " +
                           std::to_string(lineno) + " (expected " +
                           std::to_string(map.frames.size()) + ")");
    }
    map.frames.push_back(std::move(f));
  }
  if (!have_header) throw ParseError("manifest has no header line");
  validate_map(map);
  return map;
}

void write_map(const ViewSequenceMap& map, const fs::path& manifest, const std::string& blob_dir,
               const json& header_extra) {
  const fs::path dir = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
  fs::create_directories(dir / blob_dir);
  json header = header_extra.is_object() ? header_extra : json::object();
  header["descriptor_dim"] = map.descriptor_dim;
  header["image_width"] = map.image_width;
  header["image_height"] = map.image_height;
  std::string text = header.dump() + "\n";
  for (const Frame& f : map.frames) {
    const std::string rel = (fs::path(blob_dir) / blob_name(f.id)).generic_string();
    DescriptorMatrix d = f.features.descriptors;
    if (d.empty()) d = DescriptorMatrix(map.descriptor_dim);
    write_descriptor_blob(dir / rel, d);
    json kps = json::array();
    for (const auto& kp : f.features.keypoints) kps.push_back({kp.x, kp.y});
    json line = {{"id", f.id},
                 {"timestamp", f.timestamp},
                 {"pose", {f.pose.x, f.pose.y}},
                 {"descriptor_file", rel},
                 {"keypoints", std::move(kps)}};
    text += line.dump() + "\n";
  }
  atomic_write(manifest, text);
}

std::vector<GroundTruthBox> load_ground_truth(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<GroundTruthBox> boxes;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::size_t lineno = k + 1;
    if (blank(lines[k])) continue;
    const json j = parse_line(lines[k], lineno);
    if (j.contains("header")) continue;
    GroundTruthBox b;
    b.frame_id = require<int>(j, "frame_id", lineno);
    const auto box = require<std::vector<double>>(j, "box", lineno);
    if (box.size() != 4) throw ParseError("box must be [x0, y0, x1, y1]", lineno);
    b.x0 = box[0];
    b.y0 = box[1];
    b.x1 = box[2];
    b.y1 = box[3];
    try {
      validate_box(b);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " at line " + std::to_string(lineno));
    }
    boxes.push_back(b);
  }
  return boxes;
}

void write_ground_truth(const fs::path& path, const std::vector<GroundTruthBox>& boxes,
                        const json& header) {
  std::string text;
  if (!header.is_null()) text += json{{"header", header}}.dump() + "\n";
  for (const auto& b : boxes) {
    text += json{{"frame_id", b.frame_id}, {"box", {b.x0, b.y0, b.x1, b.y1}}}.dump() + "\n";
  }
  atomic_write(path, text);
}

ExperienceSet load_experience(const fs::path& path) { return {read_descriptor_blob(path)}; }

void write_experience(const fs::path& path, const ExperienceSet& e) {
  write_descriptor_blob(path, e.descriptors);
}

}  // namespace pscd
