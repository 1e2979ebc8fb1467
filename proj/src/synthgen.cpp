#include "pscd/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pscd/error.hpp"
#include "pscd/map_io.hpp"

namespace pscd {

using nlohmann::json;

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synth config: " + m); };
  if (n_places < 1) fail("n_places must be >= 1");
  if (frames_per_place < 1) fail("frames_per_place must be >= 1");
  if (features_per_frame < 1) fail("features_per_frame must be >= 1");
  if (descriptor_dim < 4) fail("descriptor_dim must be >= 4 (place, change and texture blocks)");
  if (!(cluster_separation > 0.0)) fail("cluster_separation must be > 0");
  if (!(intra_cluster_noise >= 0.0)) fail("intra_cluster_noise must be >= 0");
  if (!(stable_fraction >= 0.0 && stable_fraction <= 1.0)) fail("stable_fraction must lie in [0, 1]");
  if (n_queries < 1) fail("n_queries must be >= 1");
  if (change_features_per_query < 1) fail("change_features_per_query must be >= 1");
  if (change_features_per_query > features_per_frame) {
    fail("change_features_per_query exceeds features_per_frame");
  }
  if (image_width < 2 || image_height < 2) fail("image size must be at least 2x2");
  if (!(speed_variation >= 0.0 && speed_variation < 1.0)) fail("speed_variation must lie in [0, 1)");
  if (experience_size < 1) fail("experience_size must be >= 1");
  if (loop_geometry == LoopGeometry::Loop && !(circuit_length_m >= 600.0)) {
    fail("circuit_length_m must be >= 600 for loop geometry");
  }
  if (!(circuit_length_m > 0.0)) fail("circuit_length_m must be > 0");
}

json to_json(const SynthConfig& c) {
  return {{"seed", c.seed},
          {"n_places", c.n_places},
          {"frames_per_place", c.frames_per_place},
          {"features_per_frame", c.features_per_frame},
          {"descriptor_dim", c.descriptor_dim},
          {"cluster_separation", c.cluster_separation},
          {"intra_cluster_noise", c.intra_cluster_noise},
          {"stable_fraction", c.stable_fraction},
          {"n_queries", c.n_queries},
          {"change_features_per_query", c.change_features_per_query},
          {"image_size", {c.image_width, c.image_height}},
          {"loop_geometry", c.loop_geometry == LoopGeometry::Loop ? "loop" : "line"},
          {"speed_variation", c.speed_variation},
          {"experience_size", c.experience_size},
          {"circuit_length_m", c.circuit_length_m}};
}

SynthConfig synth_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
  SynthConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "n_places") c.n_places = v.get<int>();
      else if (key == "frames_per_place") c.frames_per_place = v.get<int>();
      else if (key == "features_per_frame") c.features_per_frame = v.get<int>();
      else if (key == "descriptor_dim") c.descriptor_dim = v.get<int>();
      else if (key == "cluster_separation") c.cluster_separation = v.get<double>();
      else if (key == "intra_cluster_noise") c.intra_cluster_noise = v.get<double>();
      else if (key == "stable_fraction") c.stable_fraction = v.get<double>();
      else if (key == "n_queries") c.n_queries = v.get<int>();
      else if (key == "change_features_per_query") c.change_features_per_query = v.get<int>();
      else if (key == "image_size") {
        const auto s = v.get<std::vector<int>>();
        if (s.size() != 2) throw ConfigError("image_size must be [width, height]");
        c.image_width = s[0];
        c.image_height = s[1];
      } else if (key == "image_width") c.image_width = v.get<int>();
      else if (key == "image_height") c.image_height = v.get<int>();
      else if (key == "loop_geometry") {
        const auto g = v.get<std::string>();
        if (g == "loop") c.loop_geometry = LoopGeometry::Loop;
        else if (g == "line") c.loop_geometry = LoopGeometry::Line;
        else throw ConfigError("loop_geometry must be \"loop\" or \"line\"");
      } else if (key == "speed_variation") c.speed_variation = v.get<double>();
      else if (key == "experience_size") c.experience_size = v.get<int>();
      else if (key == "circuit_length_m") c.circuit_length_m = v.get<double>();
      else throw ConfigError("unknown synth config key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string to_string(FeatureLabel l) {
  switch (l) {
    case FeatureLabel::Stable: return "stable";
    case FeatureLabel::Ephemeral: return "ephemeral";
    case FeatureLabel::Change: return "change";
  }
  return "?";
}

std::vector<Frame> SynthData::query_frames() const {
  std::vector<Frame> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(q.query_frame);
  return out;
}

std::vector<GroundTruthBox> SynthData::boxes() const {
  std::vector<GroundTruthBox> out;
  for (const auto& q : queries) out.insert(out.end(), q.gt_boxes.begin(), q.gt_boxes.end());
  return out;
}

namespace {

// Block layout of the descriptor space.
struct Layout {
  std::size_t dim = 0;
  std::size_t place_begin = 0, place_end = 0;
  std::size_t change_begin = 0, change_end = 0;
  std::size_t texture_begin = 0, band_width = 0;  // two bands of band_width dims

  explicit Layout(std::size_t d) : dim(d) {
    const std::size_t texture = std::max<std::size_t>(2, 2 * (d / 8));
    const std::size_t change = std::max<std::size_t>(1, d / 4);
    place_end = d - texture - change;
    change_begin = place_end;
    change_end = change_begin + change;
    texture_begin = change_end;
    band_width = texture / 2;
  }
  std::size_t place_dims() const { return place_end - place_begin; }
  std::size_t band_begin(int band) const { return texture_begin + band * band_width; }
};

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  /// Standard normal truncated to [-6, 6].
  double truncated_normal() {
    for (;;) {
      const double z = normal_(rng_);
      if (std::abs(z) <= 6.0) return z;
    }
  }

  /// Unit vector over `n` coordinates; `positive` folds it into the positive orthant.
  std::vector<double> direction(std::size_t n, bool positive) {
    std::vector<double> v(n);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& x : v) {
        x = normal_(rng_);
        if (positive) x = std::abs(x);
        norm += x * x;
      }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

double dist(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

struct World {
  explicit World(Layout l) : layout(l) {}
  Layout layout;
  double sigma = 0.0;
  double radius = 0.0;                         // sphere of place centers
  std::vector<std::vector<float>> centers;     // per place
  std::vector<std::vector<std::vector<float>>> landmarks;  // per place
  double spacing = 0.0;                        // min landmark spacing achieved
  double eph_energy = 0.0;                     // E0 of map ephemerals
  double jitter_sd = 0.0;
  std::vector<float> change_center;
};

std::vector<std::vector<float>> place_centers(const SynthConfig& c, const Layout& lay, Sampler& s,
                                              double& radius) {
  radius = c.cluster_separation;
  for (int growth = 0; growth < 40; ++growth, radius *= 1.25) {
    std::vector<std::vector<float>> centers;
    int failures = 0;
    while (static_cast<int>(centers.size()) < c.n_places && failures < 2000) {
      const auto dir = s.direction(lay.place_dims(), false);
      std::vector<float> v(lay.dim, 0.0f);
      for (std::size_t k = 0; k < dir.size(); ++k) {
        v[lay.place_begin + k] = static_cast<float>(radius * dir[k]);
      }
      bool ok = true;
      for (const auto& other : centers) {
        if (dist(v, other) < c.cluster_separation) {
          ok = false;
          break;
        }
      }
      if (ok) {
        centers.push_back(std::move(v));
      } else {
        ++failures;
      }
    }
    if (static_cast<int>(centers.size()) == c.n_places) return centers;
  }
  throw ConfigError("cannot place " + std::to_string(c.n_places) + " cluster centers " +
                    std::to_string(c.cluster_separation) + " apart in " +
                    std::to_string(lay.place_dims()) + " place dimensions");
}

std::vector<std::vector<float>> place_landmarks(const std::vector<float>& center, int count,
                                                const Layout& lay, double sigma, Sampler& s,
                                                double& spacing) {
  double target = sigma;
  for (;;) {
    std::vector<std::vector<float>> out;
    bool ok = true;
    for (int i = 0; i < count && ok; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        std::vector<float> v = center;
        for (std::size_t k = lay.place_begin; k < lay.place_end; ++k) {
          v[k] = static_cast<float>(center[k] + sigma * s.truncated_normal());
        }
        placed = std::all_of(out.begin(), out.end(),
                             [&](const auto& o) { return dist(v, o) >= target; });
        if (placed) out.push_back(std::move(v));
      }
      ok = placed;
    }
    if (ok || target < sigma * 1e-6 || sigma == 0.0) {
      spacing = ok ? target : 0.0;
      if (!ok) {
        // Give up on spacing; fill the remainder freely.
        while (static_cast<int>(out.size()) < count) {
          std::vector<float> v = center;
          for (std::size_t k = lay.place_begin; k < lay.place_end; ++k) {
            v[k] = static_cast<float>(center[k] + sigma * s.truncated_normal());
          }
          out.push_back(std::move(v));
        }
      }
      return out;
    }
    target *= 0.5;
  }
}

World make_world(const SynthConfig& c, Sampler& s) {
  World w(Layout(static_cast<std::size_t>(c.descriptor_dim)));
  w.sigma = c.intra_cluster_noise;
  w.centers = place_centers(c, w.layout, s, w.radius);
  const int n_stable = static_cast<int>(std::lround(c.stable_fraction * c.features_per_frame));
  w.spacing = std::numeric_limits<double>::infinity();
  for (const auto& center : w.centers) {
    double sp = 0.0;
    w.landmarks.push_back(place_landmarks(center, n_stable, w.layout, w.sigma, s, sp));
    w.spacing = std::min(w.spacing, sp);
  }
  if (!std::isfinite(w.spacing)) w.spacing = w.sigma;
  // Ephemeral offsets stay well inside the landmark spacing; twin jitter
  // stays well inside the ephemeral offset.
  w.eph_energy = w.spacing / 4.0;
  w.jitter_sd = w.eph_energy / (240.0 * std::sqrt(static_cast<double>(w.layout.dim)));

  w.change_center.assign(w.layout.dim, 0.0f);
  const auto dir = s.direction(w.layout.change_end - w.layout.change_begin, true);
  for (std::size_t k = 0; k < dir.size(); ++k) {
    w.change_center[w.layout.change_begin + k] = static_cast<float>(w.radius * dir[k]);
  }
  return w;
}

// Landmark instance: jittered, clamped to 6 sigma around the place center.
std::vector<float> observe(const World& w, const std::vector<float>& landmark,
                           const std::vector<float>& center, Sampler& s) {
  std::vector<float> v = landmark;
  for (std::size_t k = 0; k < v.size(); ++k) {
    double x = landmark[k] + w.jitter_sd * s.truncated_normal();
    const double lim = 6.0 * w.sigma;
    x = std::clamp(x, center[k] - lim, center[k] + lim);
    v[k] = static_cast<float>(x);
  }
  return v;
}

// Noise around the origin of the place block, plus `offset` elsewhere.
std::vector<float> free_feature(const World& w, Sampler& s) {
  std::vector<float> v(w.layout.dim);
  for (auto& x : v) x = static_cast<float>(w.sigma * s.truncated_normal());
  return v;
}

Keypoint random_keypoint(const SynthConfig& c, Sampler& s, const GroundTruthBox* avoid) {
  for (;;) {
    Keypoint kp{s.uniform(0.0, c.image_width), s.uniform(0.0, c.image_height)};
    if (kp.x >= c.image_width || kp.y >= c.image_height) continue;
    if (avoid && avoid->contains(kp)) continue;
    return kp;
  }
}

Pose2 pose_at(const SynthConfig& c, double arc) {
  if (c.loop_geometry == LoopGeometry::Line) return {arc, 0.0};
  const double r = c.circuit_length_m / (2.0 * std::numbers::pi);
  const double a = 2.0 * std::numbers::pi * arc / c.circuit_length_m;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace

SynthData generate(const SynthConfig& config) {
  config.validate();
  Sampler s(config.seed);
  World w = make_world(config, s);
  const Layout& lay = w.layout;

  SynthData out;
  out.config = config;
  auto& map = out.map;
  map.descriptor_dim = lay.dim;
  map.image_width = config.image_width;
  map.image_height = config.image_height;

  const int laps = config.loop_geometry == LoopGeometry::Loop ? 2 : 1;
  const double place_len = config.circuit_length_m / config.n_places;
  const int n_features = config.features_per_frame;
  std::vector<int> lap2_frames;

  for (int lap = 0; lap < laps; ++lap) {
    for (int p = 0; p < config.n_places; ++p) {
      const double v = config.speed_variation;
      const int count = std::max(
          1, static_cast<int>(std::lround(config.frames_per_place * s.uniform(1.0 - v, 1.0 + v))));
      out.truth.boundaries.push_back(static_cast<int>(map.frames.size()));
      out.truth.segment_place.push_back(p);
      const auto& center = w.centers[p];
      const auto& marks = w.landmarks[p];
      for (int i = 0; i < count; ++i) {
        Frame f;
        f.id = static_cast<int>(map.frames.size());
        f.timestamp = 0.1 * f.id;
        f.pose = pose_at(config, (p + (i + 0.5) / count) * place_len);
        f.features.descriptors = DescriptorMatrix(lay.dim);
        const int band = f.id % 2;

        std::vector<std::pair<std::vector<float>, FeatureLabel>> feats;
        for (const auto& m : marks) feats.emplace_back(observe(w, m, center, s), FeatureLabel::Stable);
        while (static_cast<int>(feats.size()) < n_features) {
          const auto& anchor = marks.empty() ? center : marks[s.index(marks.size())];
          auto e = observe(w, anchor, center, s);
          const auto dir = s.direction(lay.band_width, true);
          const double energy = w.eph_energy * s.uniform(1.0, 1.25);
          for (std::size_t k = 0; k < dir.size(); ++k) {
            e[lay.band_begin(band) + k] += static_cast<float>(energy * dir[k]);
          }
          feats.emplace_back(std::move(e), FeatureLabel::Ephemeral);
        }
        std::shuffle(feats.begin(), feats.end(), s.engine());

        std::vector<FeatureLabel> labels;
        for (auto& [d, label] : feats) {
          f.features.add(random_keypoint(config, s, nullptr), d);
          labels.push_back(label);
        }
        if (lap == laps - 1) lap2_frames.push_back(f.id);
        out.truth.map_labels.push_back(std::move(labels));
        map.frames.push_back(std::move(f));
      }
    }
  }

  // Experience: an unrelated environment with its own places plus strong
  // free-floating texture.
  {
    auto& e = out.experience.descriptors;
    e = DescriptorMatrix(lay.dim);
    e.reserve(config.experience_size);
    std::vector<std::vector<float>> foreign;
    for (int k = 0; k < 8; ++k) {
      const auto dir = s.direction(lay.place_dims(), false);
      std::vector<float> v(lay.dim, 0.0f);
      for (std::size_t i = 0; i < dir.size(); ++i) v[lay.place_begin + i] = static_cast<float>(w.radius * dir[i]);
      foreign.push_back(std::move(v));
    }
    for (int k = 0; k < config.experience_size; ++k) {
      auto v = free_feature(w, s);
      if (k % 2 == 0) {
        const auto& fc = foreign[s.index(foreign.size())];
        for (std::size_t i = lay.place_begin; i < lay.place_end; ++i) v[i] += fc[i];
      } else {
        const std::size_t nt = 2 * lay.band_width;
        const auto dir = s.direction(nt, true);
        const double energy = 3.0 * w.radius * s.uniform(0.8, 1.2);
        for (std::size_t i = 0; i < nt; ++i) {
          v[lay.texture_begin + i] += static_cast<float>(energy * dir[i]);
        }
      }
      e.append(v);
    }
  }

  // Queries mirror frames of the last lap.
  const CumulativePath path(map);
  const double min_path = config.loop_geometry == LoopGeometry::Loop ? 400.0 : 0.0;
  for (int q = 0; q < config.n_queries; ++q) {
    const int src = lap2_frames[s.index(lap2_frames.size())];
    const Frame& mirror = map.frames[src];
    const auto seg = static_cast<std::size_t>(
        std::upper_bound(out.truth.boundaries.begin(), out.truth.boundaries.end(), src) -
        out.truth.boundaries.begin() - 1);
    const int place = out.truth.segment_place[seg];

    QuerySpec spec;
    Frame& f = spec.query_frame;
    f.id = q;
    f.timestamp = 0.1 * q;
    const double ang = s.uniform(0.0, 2.0 * std::numbers::pi);
    const double rad = s.uniform(0.0, 0.5);
    f.pose = {mirror.pose.x + rad * std::cos(ang), mirror.pose.y + rad * std::sin(ang)};
    f.features.descriptors = DescriptorMatrix(lay.dim);

    GroundTruthBox box;
    box.frame_id = q;
    const double bw = config.image_width * s.uniform(0.1, 0.3);
    const double bh = config.image_height * s.uniform(0.1, 0.3);
    box.x0 = s.uniform(0.0, config.image_width - bw);
    box.y0 = s.uniform(0.0, config.image_height - bh);
    box.x1 = box.x0 + bw;
    box.y1 = box.y0 + bh;

    const auto& marks = w.landmarks[place];
    const int n_change = config.change_features_per_query;
    const int n_stable = std::max(0, static_cast<int>(marks.size()) - n_change);

    struct Item {
      std::vector<float> d;
      FeatureLabel label;
    };
    std::vector<Item> items;
    std::vector<std::size_t> order(marks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), s.engine());
    for (int i = 0; i < n_stable; ++i) {
      items.push_back({observe(w, marks[order[i]], w.centers[place], s), FeatureLabel::Stable});
    }
    for (int i = 0; i < n_change; ++i) {
      auto v = free_feature(w, s);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += w.change_center[k];
      items.push_back({std::move(v), FeatureLabel::Change});
    }
    while (static_cast<int>(items.size()) < n_features) {
      auto v = free_feature(w, s);
      const double share = s.uniform(0.0, 1.0);
      for (std::size_t k = lay.change_begin; k < lay.change_end; ++k) {
        v[k] += static_cast<float>(share * w.change_center[k]);
      }
      const int band = static_cast<int>(s.index(2));
      const auto dir = s.direction(lay.band_width, true);
      const double energy = w.radius * s.uniform(0.5, 1.5);
      for (std::size_t k = 0; k < dir.size(); ++k) {
        v[lay.band_begin(band) + k] += static_cast<float>(energy * dir[k]);
      }
      items.push_back({std::move(v), FeatureLabel::Ephemeral});
    }
    std::shuffle(items.begin(), items.end(), s.engine());

    std::vector<FeatureLabel> labels;
    for (const auto& it : items) {
      Keypoint kp;
      if (it.label == FeatureLabel::Change) {
        do {
          kp = {s.uniform(box.x0, box.x1), s.uniform(box.y0, box.y1)};
        } while (!box.contains(kp));
      } else {
        kp = random_keypoint(config, s, &box);
      }
      f.features.add(kp, it.d);
      labels.push_back(it.label);
    }
    spec.gt_boxes.push_back(box);
    try {
      spec.relevant_map_frame_id = find_relevant_pair(map, path, f.pose, min_path);
    } catch (const NoRelevantPairError&) {
      spec.relevant_map_frame_id = -1;
    }
    out.truth.query_labels.push_back(std::move(labels));
    out.truth.query_source_frame.push_back(src);
    out.queries.push_back(std::move(spec));
  }
  return out;
}

json planted_truth_json(const SynthData& data) {
  json labels = json::object();
  for (std::size_t f = 0; f < data.truth.map_labels.size(); ++f) {
    json l = json::array();
    for (auto x : data.truth.map_labels[f]) l.push_back(to_string(x));
    labels[std::to_string(f)] = std::move(l);
  }
  json qlabels = json::object();
  json queries = json::array();
  for (std::size_t q = 0; q < data.queries.size(); ++q) {
    json l = json::array();
    for (auto x : data.truth.query_labels[q]) l.push_back(to_string(x));
    qlabels[std::to_string(q)] = std::move(l);
    queries.push_back({{"query_id", q},
                       {"source_frame", data.truth.query_source_frame[q]},
                       {"relevant_map_frame_id", data.queries[q].relevant_map_frame_id}});
  }
  return {{"config", to_json(data.config)},
          {"boundaries", data.truth.boundaries},
          {"segment_place", data.truth.segment_place},
          {"labels", std::move(labels)},
          {"query_labels", std::move(qlabels)},
          {"queries", std::move(queries)}};
}

void write_synth(const SynthData& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const json header = {{"config", to_json(data.config)}, {"generator", "pscd synth"}};
  write_map(data.map, dir / "map.jsonl", "map_desc", header);
  ViewSequenceMap qmap;
  qmap.frames = data.query_frames();
  qmap.image_width = data.map.image_width;
  qmap.image_height = data.map.image_height;
  qmap.descriptor_dim = data.map.descriptor_dim;
  write_map(qmap, dir / "queries.jsonl", "query_desc", header);
  write_experience(dir / "experience.psdf", data.experience);
  write_ground_truth(dir / "ground_truth.jsonl", data.boxes(), header);
  atomic_write(dir / "planted_truth.json", planted_truth_json(data).dump(1) + "\n");
}

}  // namespace pscd
