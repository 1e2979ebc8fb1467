#include "pscd/linsvm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "pscd/error.hpp"
#include "pscd/map_io.hpp"

namespace pscd {

using nlohmann::json;

void SvmHyper::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError("SVM regularization C must be > 0");
  if (epochs < 1) throw ParameterError("SVM epochs must be >= 1");
}

namespace {

double dot(std::span<const double> w, std::span<const float> x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * static_cast<double>(x[k]);
  return acc;
}

}  // namespace

SvmModel train_svm(const DescriptorMatrix& positives, const DescriptorMatrix& negatives,
                   const SvmHyper& hyper) {
  hyper.validate();
  if (positives.empty() || negatives.empty()) {
    throw OneSidedTrainingError("SVM training needs both classes (" +
                                std::to_string(positives.rows()) + " positive, " +
                                std::to_string(negatives.rows()) + " negative)");
  }
  if (positives.dim() != negatives.dim()) {
    throw DimensionError("positive dim " + std::to_string(positives.dim()) +
                         " != negative dim " + std::to_string(negatives.dim()));
  }

  const std::size_t np = positives.rows();
  const std::size_t n = np + negatives.rows();
  const std::size_t dim = positives.dim();
  const double lambda = 1.0 / (hyper.c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);
  auto sample = [&](std::size_t i) { return i < np ? positives.row(i) : negatives.row(i - np); };

  // Train on data centered at the midpoint of the class means, with the
  // bias carried as an extra constant feature of the data's RMS norm. A
  // bias updated with the raw 1/(lambda t) step never shrinks and swamps w.
  std::vector<double> center(dim, 0.0);
  {
    std::vector<double> mp(dim, 0.0), mn(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& acc = i < np ? mp : mn;
      const auto x = sample(i);
      for (std::size_t k = 0; k < dim; ++k) acc[k] += x[k];
    }
    const double cp = static_cast<double>(np), cn = static_cast<double>(n - np);
    for (std::size_t k = 0; k < dim; ++k) center[k] = 0.5 * (mp[k] / cp + mn[k] / cn);
  }
  double bias_feature = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = sample(i);
    for (std::size_t k = 0; k < dim; ++k) {
      const double v = x[k] - center[k];
      bias_feature += v * v;
    }
  }
  bias_feature = std::sqrt(bias_feature / static_cast<double>(n));
  if (!(bias_feature > 0.0)) bias_feature = 1.0;

  // w[dim] multiplies the bias feature.
  std::vector<double> w(dim + 1, 0.0), avg(dim + 1, 0.0), z(dim + 1);
  const int avg_epochs = (hyper.epochs + 1) / 2;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(hyper.seed);

  std::uint64_t t = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool accumulate = epoch >= hyper.epochs - avg_epochs;
    for (std::size_t idx : order) {
      ++t;
      const auto x = sample(idx);
      const double y = idx < np ? 1.0 : -1.0;
      for (std::size_t k = 0; k < dim; ++k) z[k] = static_cast<double>(x[k]) - center[k];
      z[dim] = bias_feature;
      double margin = 0.0;
      for (std::size_t k = 0; k <= dim; ++k) margin += w[k] * z[k];
      margin *= y;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      if (margin < 1.0) {
        for (std::size_t k = 0; k <= dim; ++k) w[k] += eta * y * z[k];
      }
      double norm2 = 0.0;
      for (double v : w) norm2 += v * v;
      if (norm2 > radius * radius) {
        const double s = radius / std::sqrt(norm2);
        for (double& v : w) v *= s;
      }
      if (accumulate) {
        for (std::size_t k = 0; k <= dim; ++k) avg[k] += w[k];
      }
    }
  }
  const double count = static_cast<double>(n) * avg_epochs;
  std::vector<double> weights(dim);
  double bias = avg[dim] / count * bias_feature;
  for (std::size_t k = 0; k < dim; ++k) {
    weights[k] = avg[k] / count;
    bias -= weights[k] * center[k];
  }

  SvmModel m;
  m.weights = std::move(weights);
  m.bias = bias;
  m.hyper = hyper;
  m.training_seed = hyper.seed;
  return m;
}

double score(const SvmModel& model, std::span<const float> x) {
  if (x.size() != model.weights.size()) {
    throw DimensionError("model dim " + std::to_string(model.weights.size()) + " != input dim " +
                         std::to_string(x.size()));
  }
  return dot(model.weights, x) + model.bias;
}

std::vector<double> scores(const SvmModel& model, const DescriptorMatrix& xs) {
  std::vector<double> out(xs.rows());
  for (std::size_t i = 0; i < xs.rows(); ++i) out[i] = score(model, xs.row(i));
  return out;
}

std::vector<std::size_t> rank_by_score(const SvmModel& model, const DescriptorMatrix& xs) {
  const auto s = scores(model, xs);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s[a] > s[b];
  });
  return order;
}

double svm_objective(std::span<const double> weights, double bias, double c,
                     const DescriptorMatrix& positives, const DescriptorMatrix& negatives) {
  const std::size_t n = positives.rows() + negatives.rows();
  if (n == 0) return 0.0;
  double w2 = 0.0;
  for (double v : weights) w2 += v * v;
  double hinge = 0.0;
  for (std::size_t i = 0; i < positives.rows(); ++i) {
    hinge += std::max(0.0, 1.0 - (dot(weights, positives.row(i)) + bias));
  }
  for (std::size_t i = 0; i < negatives.rows(); ++i) {
    hinge += std::max(0.0, 1.0 + (dot(weights, negatives.row(i)) + bias));
  }
  const double nn = static_cast<double>(n);
  return w2 / (2.0 * c * nn) + hinge / nn;
}

json to_json(const SvmModel& m) {
  return {{"dim", m.weights.size()},
          {"weights", m.weights},
          {"bias", m.bias},
          {"hyper", {{"c", m.hyper.c}, {"epochs", m.hyper.epochs}, {"seed", m.hyper.seed}}},
          {"seed", m.training_seed}};
}

SvmModel svm_from_json(const json& j) {
  try {
    SvmModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    if (j.at("dim").get<std::size_t>() != m.weights.size()) {
      throw DimensionError("model file: dim disagrees with weight count");
    }
    m.bias = j.at("bias").get<double>();
    const auto& h = j.at("hyper");
    m.hyper.c = h.at("c").get<double>();
    m.hyper.epochs = h.at("epochs").get<int>();
    m.hyper.seed = h.at("seed").get<std::uint64_t>();
    m.training_seed = j.at("seed").get<std::uint64_t>();
    for (double v : m.weights) {
      if (!std::isfinite(v)) throw ValidationError("model file: non-finite weight");
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

void save_svm(const std::filesystem::path& path, const SvmModel& model) {
  atomic_write(path, to_json(model).dump(2) + "\n");
}

SvmModel load_svm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return svm_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace pscd
