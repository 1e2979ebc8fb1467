#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pscd {

/// A single descriptor held by value. Collections use DescriptorMatrix.
using Descriptor = std::vector<float>;

/// Row-major block of equal-dimension descriptors.
class DescriptorMatrix {
 public:
  DescriptorMatrix() = default;
  explicit DescriptorMatrix(std::size_t dim) : dim_(dim) {}
  DescriptorMatrix(std::size_t rows, std::size_t dim) : dim_(dim), data_(rows * dim, 0.0f) {}
  /// Takes ownership of `data`; its size must be a multiple of `dim`.
  DescriptorMatrix(std::size_t dim, std::vector<float> data);

  std::size_t rows() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  void reserve(std::size_t rows) { data_.reserve(rows * dim_); }
  /// Appends one row. Throws DimensionError on a size mismatch.
  void append(std::span<const float> values);
  void append_rows(const DescriptorMatrix& other);
  DescriptorMatrix select(std::span<const std::size_t> indices) const;

  const std::vector<float>& data() const { return data_; }

  bool operator==(const DescriptorMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Keypoint&) const = default;
};

/// Keypoints paired row-for-row with descriptors.
struct FeatureSet {
  std::vector<Keypoint> keypoints;
  DescriptorMatrix descriptors;

  std::size_t size() const { return keypoints.size(); }
  bool empty() const { return keypoints.empty(); }
  void add(const Keypoint& kp, std::span<const float> descriptor);
  FeatureSet select(std::span<const std::size_t> indices) const;

  bool operator==(const FeatureSet&) const = default;
};

struct Pose2 {
  double x = 0.0;  // meters
  double y = 0.0;
  bool operator==(const Pose2&) const = default;
};

double euclidean(const Pose2& a, const Pose2& b);

struct Frame {
  int id = 0;
  double timestamp = 0.0;  // seconds
  Pose2 pose;
  FeatureSet features;

  bool operator==(const Frame&) const = default;
};

/// Ordered frames recorded along one trajectory.
struct ViewSequenceMap {
  std::vector<Frame> frames;
  int image_width = 0;
  int image_height = 0;
  std::size_t descriptor_dim = 0;

  std::size_t size() const { return frames.size(); }

  bool operator==(const ViewSequenceMap&) const = default;
};

struct GroundTruthBox {
  int frame_id = 0;
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  /// Boundary-inclusive.
  bool contains(const Keypoint& kp) const {
    return kp.x >= x0 && kp.x <= x1 && kp.y >= y0 && kp.y <= y1;
  }
  bool operator==(const GroundTruthBox&) const = default;
};

/// Auxiliary "visual experience" pool, independent of map and queries.
struct ExperienceSet {
  DescriptorMatrix descriptors;
  bool operator==(const ExperienceSet&) const = default;
};

/// Checks every type invariant of a map; throws DimensionError,
/// StructureError or ValidationError naming the offending frame.
void validate_map(const ViewSequenceMap& map);

/// Same checks applied to a standalone frame list (e.g. query frames).
void validate_frames(std::span<const Frame> frames, int image_width, int image_height,
                     std::size_t descriptor_dim);

void validate_box(const GroundTruthBox& box);
void validate_box(const GroundTruthBox& box, int image_width, int image_height);

/// Length of the pose polyline from frame i to frame j (i <= j).
double path_distance(const ViewSequenceMap& map, int i, int j);

/// Prefix sums of the pose polyline for O(1) traveled-distance queries.
class CumulativePath {
 public:
  explicit CumulativePath(const ViewSequenceMap& map);
  /// Traveled distance between frames a and b in either order.
  double between(int a, int b) const;

 private:
  std::vector<double> prefix_;
};

}  // namespace pscd
