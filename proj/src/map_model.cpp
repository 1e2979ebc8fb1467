#include "pscd/map_model.hpp"

#include <cmath>
#include <string>

#include "pscd/error.hpp"

namespace pscd {

DescriptorMatrix::DescriptorMatrix(std::size_t dim, std::vector<float> data)
    : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0 ? !data_.empty() : data_.size() % dim_ != 0) {
    throw DimensionError("descriptor data size " + std::to_string(data_.size()) +
                         " is not a multiple of dim " + std::to_string(dim_));
  }
}

void DescriptorMatrix::append(std::span<const float> values) {
  if (values.size() != dim_) {
    throw DimensionError("descriptor of dim " + std::to_string(values.size()) +
                         " appended to matrix of dim " + std::to_string(dim_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

void DescriptorMatrix::append_rows(const DescriptorMatrix& other) {
  if (other.empty()) return;
  if (other.dim_ != dim_) {
    throw DimensionError("cannot append dim " + std::to_string(other.dim_) + " rows to dim " +
                         std::to_string(dim_));
  }
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

DescriptorMatrix DescriptorMatrix::select(std::span<const std::size_t> indices) const {
  DescriptorMatrix out(dim_);
  out.reserve(indices.size());
  for (std::size_t i : indices) out.append(row(i));
  return out;
}

void FeatureSet::add(const Keypoint& kp, std::span<const float> descriptor) {
  descriptors.append(descriptor);
  keypoints.push_back(kp);
}

FeatureSet FeatureSet::select(std::span<const std::size_t> indices) const {
  FeatureSet out;
  out.descriptors = descriptors.select(indices);
  out.keypoints.reserve(indices.size());
  for (std::size_t i : indices) out.keypoints.push_back(keypoints[i]);
  return out;
}

double euclidean(const Pose2& a, const Pose2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

std::string frame_tag(int id) { return "frame " + std::to_string(id); }

void validate_frame(const Frame& f, int width, int height, std::size_t dim) {
  const auto& fs = f.features;
  if (fs.descriptors.dim() != dim && !(fs.empty() && fs.descriptors.empty())) {
    throw DimensionError(frame_tag(f.id) + ": descriptor dim " +
                         std::to_string(fs.descriptors.dim()) + " != dataset dim " +
                         std::to_string(dim));
  }
  if (fs.descriptors.rows() != fs.keypoints.size()) {
    throw StructureError(frame_tag(f.id) + ": " + std::to_string(fs.keypoints.size()) +
                         " keypoints but " + std::to_string(fs.descriptors.rows()) +
                         " descriptors");
  }
  for (float v : fs.descriptors.data()) {
    if (!std::isfinite(v)) throw ValidationError(frame_tag(f.id) + ": non-finite descriptor");
  }
  for (const auto& kp : fs.keypoints) {
    if (!(kp.x >= 0.0 && kp.x < width && kp.y >= 0.0 && kp.y < height)) {
      throw ValidationError(frame_tag(f.id) + ": keypoint (" + std::to_string(kp.x) + ", " +
                            std::to_string(kp.y) + ") outside image");
    }
  }
  if (!std::isfinite(f.timestamp) || !std::isfinite(f.pose.x) || !std::isfinite(f.pose.y)) {
    throw ValidationError(frame_tag(f.id) + ": non-finite timestamp or pose");
  }
}

}  // namespace

void validate_frames(std::span<const Frame> frames, int image_width, int image_height,
                     std::size_t descriptor_dim) {
  if (descriptor_dim == 0) throw DimensionError("descriptor_dim must be >= 1");
  if (image_width <= 0 || image_height <= 0) throw ValidationError("image size must be positive");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = frames[k];
    if (f.id != static_cast<int>(k)) {
      throw StructureError("frame ids must be consecutive from 0: position " +
                           std::to_string(k) + " holds id " + std::to_string(f.id));
    }
    if (k > 0 && f.timestamp < frames[k - 1].timestamp) {
      throw StructureError(frame_tag(f.id) + ": timestamp decreases");
    }
    validate_frame(f, image_width, image_height, descriptor_dim);
  }
}

void validate_map(const ViewSequenceMap& map) {
  if (map.frames.empty()) throw StructureError("map has no frames");
  validate_frames(map.frames, map.image_width, map.image_height, map.descriptor_dim);
}

void validate_box(const GroundTruthBox& b) {
  if (!(b.x0 < b.x1) || !(b.y0 < b.y1)) {
    throw ValidationError("inverted ground-truth box for frame " + std::to_string(b.frame_id));
  }
}

void validate_box(const GroundTruthBox& b, int image_width, int image_height) {
  validate_box(b);
  if (b.x0 < 0 || b.y0 < 0 || b.x1 > image_width || b.y1 > image_height) {
    throw ValidationError("ground-truth box outside image for frame " +
                          std::to_string(b.frame_id));
  }
}

double path_distance(const ViewSequenceMap& map, int i, int j) {
  const int n = static_cast<int>(map.frames.size());
  if (i < 0 || j >= n || i > j) {
    throw RangeError("path_distance(" + std::to_string(i) + ", " + std::to_string(j) +
                     ") outside [0, " + std::to_string(n) + ")");
  }
  double total = 0.0;
  for (int k = i; k < j; ++k) total += euclidean(map.frames[k].pose, map.frames[k + 1].pose);
  return total;
}

CumulativePath::CumulativePath(const ViewSequenceMap& map) {
  prefix_.resize(map.frames.size(), 0.0);
  for (std::size_t k = 1; k < map.frames.size(); ++k) {
    prefix_[k] = prefix_[k - 1] + euclidean(map.frames[k - 1].pose, map.frames[k].pose);
  }
}

double CumulativePath::between(int a, int b) const {
  const int n = static_cast<int>(prefix_.size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw RangeError("frame id outside map");
  return std::abs(prefix_[b] - prefix_[a]);
}

}  // namespace pscd
