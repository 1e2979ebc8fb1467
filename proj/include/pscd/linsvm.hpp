#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "pscd/map_model.hpp"

namespace pscd {

struct SvmHyper {
  double c = 1.0;      // regularization; lambda = 1 / (c * n)
  int epochs = 20;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SvmHyper&) const = default;
};

/// Linear decision function w.x + b.
struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  SvmHyper hyper;
  std::uint64_t training_seed = 0;

  std::size_t dim() const { return weights.size(); }
  bool operator==(const SvmModel&) const = default;
};

/// Trains a linear SVM with the Pegasos stochastic subgradient method on
///   (1 / (2 c n)) |w|^2 + (1/n) sum_i max(0, 1 - y_i (w.x_i + b)),
/// positives labelled +1. Each epoch visits a fresh seeded shuffle of the
/// samples; step t uses eta = 1 / (lambda t). The bias is unregularized.
/// Deterministic for fixed (data, hyper).
///
/// Throws OneSidedTrainingError if either class is empty and
/// DimensionError if the two matrices disagree in dimension.
SvmModel train_svm(const DescriptorMatrix& positives, const DescriptorMatrix& negatives,
                   const SvmHyper& hyper = {});

double score(const SvmModel& model, std::span<const float> x);
std::vector<double> scores(const SvmModel& model, const DescriptorMatrix& xs);

/// Indices sorted by descending score; ties by ascending index.
std::vector<std::size_t> rank_by_score(const SvmModel& model, const DescriptorMatrix& xs);

/// Value of the training objective above for an arbitrary (w, b).
double svm_objective(std::span<const double> weights, double bias, double c,
                     const DescriptorMatrix& positives, const DescriptorMatrix& negatives);
inline double svm_objective(const SvmModel& m, const DescriptorMatrix& positives,
                            const DescriptorMatrix& negatives) {
  return svm_objective(m.weights, m.bias, m.hyper.c, positives, negatives);
}

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& j);
void save_svm(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_svm(const std::filesystem::path& path);

}  // namespace pscd
