#include "policytwin/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "policytwin/digest.hpp"
#include "policytwin/error.hpp"

namespace policytwin {

void GbmHyper::validate() const {
  if (trees < 0) throw ConfigError("gbm.trees must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("gbm.learning_rate must lie in (0, 1]");
  if (max_depth < 1) throw ConfigError("gbm.max_depth must be >= 1");
  if (min_leaf < 1) throw ConfigError("gbm.min_leaf must be >= 1");
  if (bins < 2 || bins > 256) throw ConfigError("gbm.bins must lie in [2, 256]");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("gbm.subsample must lie in (0, 1]");
}

void to_json(nlohmann::json& j, const GbmHyper& h) {
  j = nlohmann::json{{"trees", h.trees},         {"learning_rate", h.learning_rate}, {"max_depth", h.max_depth},
                     {"min_leaf", h.min_leaf},   {"bins", h.bins},                   {"subsample", h.subsample}};
}

void from_json(const nlohmann::json& j, GbmHyper& h) {
  if (!j.is_object()) throw ConfigError("gbm section must be an object");
  const GbmHyper d;
  h.trees = j.value("trees", d.trees);
  h.learning_rate = j.value("learning_rate", d.learning_rate);
  h.max_depth = j.value("max_depth", d.max_depth);
  h.min_leaf = j.value("min_leaf", d.min_leaf);
  h.bins = j.value("bins", d.bins);
  h.subsample = j.value("subsample", d.subsample);
}

double RegressionTree::predict(std::span<const double> x) const {
  if (nodes.empty()) return 0.0;
  int i = 0;
  while (nodes[i].feature >= 0) {
    const Node& n = nodes[i];
    i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

double GbmEnsemble::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return base + learning_rate * sum;
}

namespace {

// Cut points per feature; bin(x) = number of cuts <= x, and "x < cut[j]"
// selects bins 0..j.
std::vector<double> make_cuts(std::vector<double> column, int bins) {
  std::sort(column.begin(), column.end());
  column.erase(std::unique(column.begin(), column.end()), column.end());
  std::vector<double> cuts;
  if (column.size() <= static_cast<std::size_t>(bins)) {
    for (std::size_t i = 1; i < column.size(); ++i) cuts.push_back(0.5 * (column[i - 1] + column[i]));
    return cuts;
  }
  for (int b = 1; b < bins; ++b) {
    const std::size_t pos = column.size() * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins);
    const double c = 0.5 * (column[pos - 1] + column[pos]);
    if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
  }
  return cuts;
}

struct Binned {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<std::vector<double>> cuts;  // [feature]
  std::vector<std::uint8_t> bin;          // row-major
};

Binned bin_features(std::span<const double> rows, std::size_t width, std::size_t n, int bins) {
  Binned b;
  b.rows = n;
  b.width = width;
  b.cuts.resize(width);
  b.bin.resize(n * width);
  std::vector<double> column(n);
  for (std::size_t f = 0; f < width; ++f) {
    for (std::size_t i = 0; i < n; ++i) column[i] = rows[i * width + f];
    b.cuts[f] = make_cuts(column, bins);
    const auto& cuts = b.cuts[f];
    for (std::size_t i = 0; i < n; ++i) {
      b.bin[i * width + f] = static_cast<std::uint8_t>(std::upper_bound(cuts.begin(), cuts.end(), column[i]) - cuts.begin());
    }
  }
  return b;
}

class TreeBuilder {
 public:
  TreeBuilder(const Binned& data, const std::vector<double>& residual, const GbmHyper& hyper)
      : data_(data), residual_(residual), hyper_(hyper) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    RegressionTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  int grow(RegressionTree& tree, std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double total = 0.0;
    for (auto r : rows) total += residual_[r];
    const double n = static_cast<double>(rows.size());
    tree.nodes[id].value = total / n;

    const auto min_leaf = static_cast<std::size_t>(hyper_.min_leaf);
    if (depth >= hyper_.max_depth || rows.size() < 2 * min_leaf) return id;

    double best_gain = 1e-12 * std::max(1.0, total * total / n);
    int best_feature = -1;
    std::size_t best_cut = 0;
    std::vector<double> sum;
    std::vector<std::size_t> count;
    for (std::size_t f = 0; f < data_.width; ++f) {
      const auto& cuts = data_.cuts[f];
      if (cuts.empty()) continue;
      sum.assign(cuts.size() + 1, 0.0);
      count.assign(cuts.size() + 1, 0);
      for (auto r : rows) {
        const auto b = data_.bin[r * data_.width + f];
        sum[b] += residual_[r];
        ++count[b];
      }
      double left_sum = 0.0;
      std::size_t left_n = 0;
      for (std::size_t j = 0; j < cuts.size(); ++j) {
        left_sum += sum[j];
        left_n += count[j];
        const std::size_t right_n = rows.size() - left_n;
        if (left_n < min_leaf) continue;
        if (right_n < min_leaf) break;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                            right_sum * right_sum / static_cast<double>(right_n) - total * total / n;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_cut = j;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (data_.bin[r * data_.width + static_cast<std::size_t>(best_feature)] <= best_cut ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = data_.cuts[static_cast<std::size_t>(best_feature)][best_cut];
    const int l = grow(tree, left, depth + 1);
    const int r = grow(tree, right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }

  const Binned& data_;
  const std::vector<double>& residual_;
  const GbmHyper& hyper_;
};

double mse(const std::vector<double>& pred, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (pred[i] - y[i]) * (pred[i] - y[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace

GbmEnsemble fit_boosted_trees(std::span<const double> rows, std::size_t width, std::span<const double> targets,
                              const GbmHyper& hyper, std::uint64_t seed, std::vector<double>* training_mse) {
  hyper.validate();
  const std::size_t n = targets.size();
  if (n == 0) throw DataError("gbm: empty training set");
  if (width == 0 || rows.size() != n * width) throw DataError("gbm: feature matrix does not match targets");
  for (double v : rows) {
    if (!std::isfinite(v)) throw DataError("gbm: non-finite feature value");
  }
  for (double v : targets) {
    if (!std::isfinite(v)) throw DataError("gbm: non-finite target value");
  }

  GbmEnsemble model;
  model.learning_rate = hyper.learning_rate;
  double mean = 0.0;
  for (double y : targets) mean += y;
  model.base = mean / static_cast<double>(n);

  std::vector<double> pred(n, model.base);
  if (training_mse) {
    training_mse->clear();
    training_mse->push_back(mse(pred, targets));
  }
  if (n < static_cast<std::size_t>(hyper.min_leaf)) {
    if (training_mse) training_mse->resize(static_cast<std::size_t>(hyper.trees) + 1, training_mse->front());
    return model;
  }

  const Binned binned = bin_features(rows, width, n, hyper.bins);
  std::vector<double> residual(n);
  std::mt19937_64 rng(mix_seed(seed, 0x6762));
  TreeBuilder builder(binned, residual, hyper);

  for (int t = 0; t < hyper.trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = targets[i] - pred[i];
    std::vector<std::size_t> sample;
    sample.reserve(n);
    if (hyper.subsample >= 1.0) {
      for (std::size_t i = 0; i < n; ++i) sample.push_back(i);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (unit_interval(rng()) < hyper.subsample) sample.push_back(i);
      }
      if (sample.empty()) sample.push_back(static_cast<std::size_t>(rng() % n));
    }
    RegressionTree tree = builder.build(std::move(sample));
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += hyper.learning_rate * tree.predict(rows.subspan(i * width, width));
    }
    model.trees.push_back(std::move(tree));
    if (training_mse) training_mse->push_back(mse(pred, targets));
  }
  return model;
}

GbmModel fit_gbm(std::span<const FeatureVector> features, const std::vector<std::vector<double>>& targets,
                 const CategoryKeys& keys, const GbmHyper& hyper, std::uint64_t seed) {
  if (features.empty()) throw DataError("gbm: no training rows");
  if (targets.size() != features.size()) throw DataError("gbm: feature and target row counts differ");
  for (const auto& row : targets) {
    if (row.size() != keys.size()) throw DataError("gbm: ragged target rows");
  }
  const std::size_t width = FeatureVector::kWidth;
  std::vector<double> matrix;
  matrix.reserve(features.size() * width);
  for (const auto& f : features) {
    const auto v = f.values();
    matrix.insert(matrix.end(), v.begin(), v.end());
  }
  GbmModel model{keys, hyper, seed, {}};
  std::vector<double> column(features.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    for (std::size_t i = 0; i < features.size(); ++i) column[i] = targets[i][k];
    model.ensembles.push_back(fit_boosted_trees(matrix, width, column, hyper, mix_seed(seed, k)));
  }
  return model;
}

std::vector<double> predict_gbm(const GbmModel& model, const FeatureVector& features) {
  const auto x = features.values();
  std::vector<double> out;
  out.reserve(model.ensembles.size());
  for (const auto& e : model.ensembles) out.push_back(e.predict(x));
  return out;
}

void to_json(nlohmann::json& j, const GbmModel& m) {
  nlohmann::json ensembles = nlohmann::json::array();
  for (const auto& e : m.ensembles) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : e.trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
      trees.push_back(std::move(nodes));
    }
    ensembles.push_back({{"base", e.base}, {"learning_rate", e.learning_rate}, {"trees", std::move(trees)}});
  }
  j = nlohmann::json{{"keys", m.keys.list()}, {"hyper", m.hyper}, {"seed", m.seed}, {"ensembles", std::move(ensembles)}};
}

void from_json(const nlohmann::json& j, GbmModel& m) {
  m.keys = CategoryKeys(j.at("keys").get<std::vector<std::string>>());
  m.hyper = j.at("hyper").get<GbmHyper>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.ensembles.clear();
  for (const auto& e : j.at("ensembles")) {
    GbmEnsemble ens;
    ens.base = e.at("base").get<double>();
    ens.learning_rate = e.at("learning_rate").get<double>();
    for (const auto& t : e.at("trees")) {
      RegressionTree tree;
      for (const auto& n : t) {
        tree.nodes.push_back(RegressionTree::Node{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                                  n.at(3).get<int>(), n.at(4).get<double>()});
      }
      const int size = static_cast<int>(tree.nodes.size());
      for (int i = 0; i < size; ++i) {
        const auto& n = tree.nodes[static_cast<std::size_t>(i)];
        if (n.feature >= static_cast<int>(FeatureVector::kWidth) ||
            (n.feature >= 0 && (n.left <= i || n.right <= i || n.left >= size || n.right >= size))) {
          throw DataError("gbm model contains a malformed tree");
        }
      }
      ens.trees.push_back(std::move(tree));
    }
    m.ensembles.push_back(std::move(ens));
  }
  if (m.ensembles.size() != m.keys.size()) throw DataError("gbm model: ensemble count does not match keys");
}

void write_gbm_model(const std::filesystem::path& path, const GbmModel& model, const std::string& config_hash) {
  const nlohmann::json j{{"schema_version", 1}, {"config_hash", config_hash}, {"model", model}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

GbmModel read_gbm_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open gbm model " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("schema_version").get<int>() != 1) throw DataError(path.string() + ": unsupported schema_version");
    return j.at("model").get<GbmModel>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed gbm model: " + e.what());
  }
}

}  // namespace policytwin
