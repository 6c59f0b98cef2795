#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

#include "policytwin/baseline.hpp"
#include "policytwin/categories.hpp"

namespace policytwin {

struct GbmHyper {
  int trees = 300;
  double learning_rate = 0.1;  // (0, 1]
  int max_depth = 4;
  int min_leaf = 5;
  int bins = 64;  // histogram bins per feature, 2..256
  double subsample = 1.0;  // row fraction per tree; < 1 uses the seed

  void validate() const;
};

void to_json(nlohmann::json& j, const GbmHyper& h);
void from_json(const nlohmann::json& j, GbmHyper& h);

/// Binary regression tree in a flat array. Node 0 is the root; an internal
/// node sends x left when x[feature] < threshold.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
};

/// base + learning_rate * sum of tree outputs.
struct GbmEnsemble {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;
};

/// Least-squares gradient boosting on histogram-binned features for one
/// target. `rows` is row-major with `width` columns. If `training_mse` is
/// given it receives the training MSE after 0, 1, ..., trees trees.
GbmEnsemble fit_boosted_trees(std::span<const double> rows, std::size_t width,
                              std::span<const double> targets, const GbmHyper& hyper,
                              std::uint64_t seed, std::vector<double>* training_mse = nullptr);

/// One independent ensemble per category.
struct GbmModel {
  CategoryKeys keys;
  GbmHyper hyper;
  std::uint64_t seed = 0;
  std::vector<GbmEnsemble> ensembles;  // category order
};

/// `targets[row][k]`. Throws DataError on empty or ragged input.
GbmModel fit_gbm(std::span<const FeatureVector> features,
                 const std::vector<std::vector<double>>& targets, const CategoryKeys& keys,
                 const GbmHyper& hyper, std::uint64_t seed);

std::vector<double> predict_gbm(const GbmModel& model, const FeatureVector& features);

void to_json(nlohmann::json& j, const GbmModel& m);
void from_json(const nlohmann::json& j, GbmModel& m);

void write_gbm_model(const std::filesystem::path& path, const GbmModel& model,
                     const std::string& config_hash);
GbmModel read_gbm_model(const std::filesystem::path& path);

}  // namespace policytwin
