#include "policytwin/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "policytwin/digest.hpp"
#include "policytwin/error.hpp"

namespace policytwin {

double CategoryCalibration::apply(double p) const {
  const double y = slope * p + intercept;
  return std::min(std::max(y, clip_min), clip_max);
}

void CalibrationParams::validate() const {
  if (categories.empty()) throw ConfigError("calibration has no categories");
  for (const auto& c : categories) {
    if (!std::isfinite(c.slope) || !std::isfinite(c.intercept)) {
      throw ConfigError("calibration for '" + c.key + "' has non-finite coefficients");
    }
    if (std::isnan(c.clip_min) || std::isnan(c.clip_max) || !(c.clip_min < c.clip_max)) {
      throw ConfigError("calibration for '" + c.key + "' needs clip_min < clip_max");
    }
  }
}

const CategoryCalibration* CalibrationParams::find(std::string_view key) const {
  for (const auto& c : categories) {
    if (c.key == key) return &c;
  }
  return nullptr;
}

MetricVector apply_calibration(const BehaviorVector& pbar, const CalibrationParams& params) {
  MetricVector out{pbar.keys(), {}};
  out.values.reserve(pbar.size());
  for (std::size_t k = 0; k < pbar.size(); ++k) {
    const auto* c = params.find(pbar.keys()[k]);
    if (!c) throw DataError("no calibration parameters for category '" + pbar.keys()[k] + "'");
    out.values.push_back(c->apply(pbar[k]));
  }
  return out;
}

LinearFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  if (x.empty()) throw DataError("least squares on an empty sample");
  if (x.size() != y.size()) throw DataError("least squares: x and y lengths differ");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-24 * n)) return LinearFit{0.0, my, true};
  const double slope = sxy / sxx;
  return LinearFit{slope, my - slope * mx, false};
}

TrainingSet align_training_set(const MetricSeries& probabilities, const ObservationSeries& observations) {
  if (!(probabilities.keys == observations.keys)) {
    throw DataError("probabilities and observations use different categories");
  }
  const std::size_t d = probabilities.keys.size();
  TrainingSet set{probabilities.keys, {}, std::vector<std::vector<double>>(d), std::vector<std::vector<double>>(d)};
  for (const auto& row : probabilities.rows) {
    const MetricRow* obs = observations.find(row.date);
    if (!obs) continue;
    set.dates.push_back(row.date);
    for (std::size_t k = 0; k < d; ++k) {
      set.pbar[k].push_back(row.values[k]);
      set.observed[k].push_back(obs->values[k]);
    }
  }
  return set;
}

namespace {

const CategorySpec& spec_for(const CategorySchema& schema, const std::string& key) {
  auto k = schema.index_of(key);
  if (!k) throw ConfigError("category '" + key + "' is not in the schema");
  return schema[*k];
}

CategoryCalibration make_calibration(const CategorySpec& spec, double slope, double intercept, bool clip) {
  return CategoryCalibration{spec.key, slope, intercept, clip ? spec.clip_min : -kUnbounded,
                             clip ? spec.clip_max : kUnbounded};
}

bool widen(Interval& iv, double value) {
  if (iv.contains(value)) return false;
  const double margin = 0.05 * iv.width();
  iv.lo = std::min(iv.lo, value - margin);
  iv.hi = std::max(iv.hi, value + margin);
  return true;
}

std::unique_ptr<Sampler> make_sampler(const FitConfig& config, std::vector<Interval> space, std::uint64_t seed) {
  if (config.sampler == SamplerKind::kRandom) return std::make_unique<RandomSampler>(std::move(space), seed);
  return std::make_unique<TpeSampler>(std::move(space), seed, config.tpe);
}

int trial_budget(const FitConfig& config) {
  return config.sampler == SamplerKind::kLeastSquaresInit ? 1 : config.trials;
}

void check_training(const TrainingSet& data) {
  if (data.size() == 0) throw DataError("calibration needs at least one date with both probabilities and observations");
}

FitReport base_report(const TrainingSet& data, const FitConfig& config) {
  FitReport r;
  r.seed = config.seed;
  r.trials = trial_budget(config);
  r.objective = config.objective;
  r.sampler = config.sampler;
  r.slope_range = config.slope_range;
  r.intercept_range = config.intercept_range;
  r.training_dates = data.size();
  return r;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

CalibrationParams least_squares_fit(const TrainingSet& data, const CategorySchema& schema,
                                    std::vector<bool>* degenerate) {
  check_training(data);
  CalibrationParams params;
  if (degenerate) degenerate->assign(data.keys.size(), false);
  for (std::size_t k = 0; k < data.keys.size(); ++k) {
    const LinearFit fit = least_squares_line(data.pbar[k], data.observed[k]);
    params.categories.push_back(make_calibration(spec_for(schema, data.keys[k]), fit.slope, fit.intercept, true));
    if (degenerate) (*degenerate)[k] = fit.degenerate;
  }
  return params;
}

std::string_view to_string(FitObjective o) {
  return o == FitObjective::kPerCategory ? "per_category" : "macro";
}

std::string_view to_string(SamplerKind s) {
  switch (s) {
    case SamplerKind::kTpe: return "tpe";
    case SamplerKind::kRandom: return "random";
    case SamplerKind::kLeastSquaresInit: return "least_squares_init";
  }
  return "tpe";
}

FitObjective parse_fit_objective(std::string_view text) {
  if (text == "per_category") return FitObjective::kPerCategory;
  if (text == "macro") return FitObjective::kMacroAverage;
  throw ConfigError("unknown fit objective '" + std::string(text) + "' (per_category, macro)");
}

SamplerKind parse_sampler_kind(std::string_view text) {
  if (text == "tpe") return SamplerKind::kTpe;
  if (text == "random") return SamplerKind::kRandom;
  if (text == "least_squares_init") return SamplerKind::kLeastSquaresInit;
  throw ConfigError("unknown sampler '" + std::string(text) + "' (tpe, random, least_squares_init)");
}

void FitConfig::validate() const {
  if (trials < 1) throw ConfigError("fit.trials must be >= 1");
  for (const auto* iv : {&slope_range, &intercept_range}) {
    if (!std::isfinite(iv->lo) || !std::isfinite(iv->hi) || !(iv->lo < iv->hi)) {
      throw ConfigError("fit ranges must be finite with lo < hi");
    }
  }
}

void to_json(nlohmann::json& j, const FitConfig& c) {
  j = nlohmann::json{{"trials", c.trials},
                     {"slope_range", {c.slope_range.lo, c.slope_range.hi}},
                     {"intercept_range", {c.intercept_range.lo, c.intercept_range.hi}},
                     {"seed", c.seed},
                     {"objective", to_string(c.objective)},
                     {"sampler", to_string(c.sampler)},
                     {"clip", c.clip},
                     {"tpe",
                      {{"gamma", c.tpe.gamma},
                       {"startup_trials", c.tpe.startup_trials},
                       {"candidates", c.tpe.candidates},
                       {"prior_weight", c.tpe.prior_weight},
                       {"min_bandwidth", c.tpe.min_bandwidth}}}};
}

void from_json(const nlohmann::json& j, FitConfig& c) {
  if (!j.is_object()) throw ConfigError("fit section must be an object");
  FitConfig d;
  c.trials = j.value("trials", d.trials);
  auto range = [&](const char* name, Interval fallback) {
    if (!j.contains(name)) return fallback;
    const auto& r = j.at(name);
    if (!r.is_array() || r.size() != 2) throw ConfigError(std::string("fit.") + name + " must be [lo, hi]");
    return Interval{r[0].get<double>(), r[1].get<double>()};
  };
  c.slope_range = range("slope_range", d.slope_range);
  c.intercept_range = range("intercept_range", d.intercept_range);
  c.seed = j.value("seed", d.seed);
  c.objective = parse_fit_objective(j.value("objective", std::string(to_string(d.objective))));
  c.sampler = parse_sampler_kind(j.value("sampler", std::string(to_string(d.sampler))));
  c.clip = j.value("clip", d.clip);
  c.tpe = d.tpe;
  if (j.contains("tpe")) {
    const auto& t = j.at("tpe");
    c.tpe.gamma = t.value("gamma", d.tpe.gamma);
    c.tpe.startup_trials = t.value("startup_trials", d.tpe.startup_trials);
    c.tpe.candidates = t.value("candidates", d.tpe.candidates);
    c.tpe.prior_weight = t.value("prior_weight", d.tpe.prior_weight);
    c.tpe.min_bandwidth = t.value("min_bandwidth", d.tpe.min_bandwidth);
  }
}

std::string FitReport::summary() const {
  std::ostringstream os;
  os << "calibration fit: objective=" << to_string(objective) << " sampler=" << to_string(sampler)
     << " trials=" << trials << " seed=" << seed << " dates=" << training_dates
     << (shared_parameters ? " shared" : "") << '\n';
  os << "slope range [" << fmt_double(slope_range.lo) << ", " << fmt_double(slope_range.hi) << "], intercept range ["
     << fmt_double(intercept_range.lo) << ", " << fmt_double(intercept_range.hi) << "]\n";
  for (const auto& c : categories) {
    os << "  " << c.key << ": init rmse " << fmt_double(c.init_loss) << " -> best " << fmt_double(c.best_loss)
       << " (trial " << c.best_trial << " of " << c.trials << ")";
    if (c.degenerate_init) os << " [degenerate init]";
    if (c.range_widened) os << " [range widened]";
    os << '\n';
  }
  for (const auto& w : warnings) os << "warning: " << w << '\n';
  return os.str();
}

void to_json(nlohmann::json& j, const FitReport& r) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : r.categories) {
    cats.push_back({{"key", c.key},
                    {"init_loss", c.init_loss},
                    {"best_loss", c.best_loss},
                    {"best_trial", c.best_trial},
                    {"trials", c.trials},
                    {"degenerate_init", c.degenerate_init},
                    {"range_widened", c.range_widened}});
  }
  j = nlohmann::json{{"categories", cats},
                     {"seed", r.seed},
                     {"trials", r.trials},
                     {"objective", to_string(r.objective)},
                     {"sampler", to_string(r.sampler)},
                     {"slope_range", {r.slope_range.lo, r.slope_range.hi}},
                     {"intercept_range", {r.intercept_range.lo, r.intercept_range.hi}},
                     {"shared_parameters", r.shared_parameters},
                     {"training_dates", r.training_dates},
                     {"warnings", r.warnings}};
}

double calibration_rmse(const CategoryCalibration& c, std::span<const double> pbar, std::span<const double> observed) {
  if (pbar.empty() || pbar.size() != observed.size()) throw DataError("calibration_rmse: bad sample");
  double sse = 0.0;
  for (std::size_t i = 0; i < pbar.size(); ++i) {
    const double e = c.apply(pbar[i]) - observed[i];
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(pbar.size()));
}

FitResult fit_calibration(const TrainingSet& data, const CategorySchema& schema, const FitConfig& config) {
  config.validate();
  check_training(data);
  std::vector<bool> degenerate;
  const CalibrationParams init = least_squares_fit(data, schema, &degenerate);
  const std::size_t d = data.keys.size();
  const int budget = trial_budget(config);

  FitResult result;
  result.report = base_report(data, config);

  std::vector<CategoryCalibration> init_cals;
  for (std::size_t k = 0; k < d; ++k) {
    init_cals.push_back(make_calibration(spec_for(schema, data.keys[k]), init.categories[k].slope,
                                         init.categories[k].intercept, config.clip));
    if (degenerate[k]) {
      result.report.warnings.push_back("'" + data.keys[k] + "' probabilities have no spread; least-squares slope set to 0");
    }
  }

  if (config.objective == FitObjective::kPerCategory) {
    for (std::size_t k = 0; k < d; ++k) {
      const CategoryCalibration& base = init_cals[k];
      Interval slope_range = config.slope_range, intercept_range = config.intercept_range;
      const bool widened = widen(slope_range, base.slope) | widen(intercept_range, base.intercept);
      if (widened) {
        result.report.warnings.push_back("search range widened for '" + base.key + "' to include the least-squares initializer");
      }
      auto objective = [&](std::span<const double> x) {
        CategoryCalibration c = base;
        c.slope = x[0];
        c.intercept = x[1];
        return calibration_rmse(c, data.pbar[k], data.observed[k]);
      };
      auto sampler = make_sampler(config, {slope_range, intercept_range}, mix_seed(config.seed, k));
      const SearchResult search = minimize(objective, {base.slope, base.intercept}, budget, *sampler);
      CategoryCalibration best = base;
      best.slope = search.best().x[0];
      best.intercept = search.best().x[1];
      result.params.categories.push_back(best);
      result.report.categories.push_back(CategoryFitReport{base.key, search.trials[0].loss, search.best().loss,
                                                           static_cast<int>(search.best_index), budget,
                                                           static_cast<bool>(degenerate[k]), widened});
    }
    return result;
  }

  std::vector<Interval> space;
  std::vector<double> initial;
  std::vector<bool> widened(d, false);
  for (std::size_t k = 0; k < d; ++k) {
    Interval s = config.slope_range, b = config.intercept_range;
    widened[k] = widen(s, init_cals[k].slope) | widen(b, init_cals[k].intercept);
    if (widened[k]) {
      result.report.warnings.push_back("search range widened for '" + init_cals[k].key + "' to include the least-squares initializer");
    }
    space.push_back(s);
    space.push_back(b);
    initial.push_back(init_cals[k].slope);
    initial.push_back(init_cals[k].intercept);
  }
  auto at = [&](std::span<const double> x, std::size_t k) {
    CategoryCalibration c = init_cals[k];
    c.slope = x[2 * k];
    c.intercept = x[2 * k + 1];
    return c;
  };
  auto objective = [&](std::span<const double> x) {
    double sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) sum += calibration_rmse(at(x, k), data.pbar[k], data.observed[k]);
    return sum / static_cast<double>(d);
  };
  auto sampler = make_sampler(config, space, mix_seed(config.seed, d));
  const SearchResult search = minimize(objective, initial, budget, *sampler);
  for (std::size_t k = 0; k < d; ++k) {
    const CategoryCalibration best = at(search.best().x, k);
    result.params.categories.push_back(best);
    result.report.categories.push_back(CategoryFitReport{
        best.key, calibration_rmse(init_cals[k], data.pbar[k], data.observed[k]),
        calibration_rmse(best, data.pbar[k], data.observed[k]), static_cast<int>(search.best_index), budget,
        static_cast<bool>(degenerate[k]), widened[k]});
  }
  return result;
}

FitResult fit_shared_calibration(const TrainingSet& data, const CategorySchema& schema, const FitConfig& config) {
  config.validate();
  check_training(data);
  const std::size_t d = data.keys.size();
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < d; ++k) {
    xs.insert(xs.end(), data.pbar[k].begin(), data.pbar[k].end());
    ys.insert(ys.end(), data.observed[k].begin(), data.observed[k].end());
  }
  const LinearFit pooled = least_squares_line(xs, ys);
  Interval s = config.slope_range, b = config.intercept_range;
  const bool widened = widen(s, pooled.slope) | widen(b, pooled.intercept);

  std::vector<CategoryCalibration> base;
  for (std::size_t k = 0; k < d; ++k) base.push_back(make_calibration(spec_for(schema, data.keys[k]), 0.0, 0.0, config.clip));
  auto with = [&](std::span<const double> x, std::size_t k) {
    CategoryCalibration c = base[k];
    c.slope = x[0];
    c.intercept = x[1];
    return c;
  };
  auto objective = [&](std::span<const double> x) {
    double sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) sum += calibration_rmse(with(x, k), data.pbar[k], data.observed[k]);
    return sum / static_cast<double>(d);
  };
  const int budget = trial_budget(config);
  auto sampler = make_sampler(config, {s, b}, mix_seed(config.seed, d + 1));
  const std::vector<double> initial{pooled.slope, pooled.intercept};
  const SearchResult search = minimize(objective, initial, budget, *sampler);

  FitResult result;
  result.report = base_report(data, config);
  result.report.shared_parameters = true;
  if (pooled.degenerate) result.report.warnings.push_back("pooled probabilities have no spread; least-squares slope set to 0");
  if (widened) result.report.warnings.push_back("search range widened to include the pooled least-squares initializer");
  for (std::size_t k = 0; k < d; ++k) {
    const CategoryCalibration best = with(search.best().x, k);
    result.params.categories.push_back(best);
    result.report.categories.push_back(CategoryFitReport{
        best.key, calibration_rmse(with(initial, k), data.pbar[k], data.observed[k]),
        calibration_rmse(best, data.pbar[k], data.observed[k]), static_cast<int>(search.best_index), budget,
        pooled.degenerate, widened});
  }
  return result;
}

namespace {

nlohmann::json bound_to_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double bound_from_json(const nlohmann::json& j, const char* name, double unbounded) {
  if (!j.contains(name) || j.at(name).is_null()) return unbounded;
  return j.at(name).get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const CalibrationParams& p) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : p.categories) {
    cats.push_back({{"key", c.key},
                    {"slope", c.slope},
                    {"intercept", c.intercept},
                    {"clip_min", bound_to_json(c.clip_min)},
                    {"clip_max", bound_to_json(c.clip_max)}});
  }
  j = nlohmann::json{{"categories", cats}};
}

void from_json(const nlohmann::json& j, CalibrationParams& p) {
  p.categories.clear();
  for (const auto& c : j.at("categories")) {
    p.categories.push_back(CategoryCalibration{c.at("key").get<std::string>(), c.at("slope").get<double>(),
                                               c.at("intercept").get<double>(),
                                               bound_from_json(c, "clip_min", -kUnbounded),
                                               bound_from_json(c, "clip_max", kUnbounded)});
  }
  p.validate();
}

void write_calibration_artifact(const std::filesystem::path& path, const CalibrationArtifact& artifact) {
  nlohmann::json j{{"schema_version", CalibrationArtifact::kSchemaVersion},
                   {"config_hash", artifact.config_hash},
                   {"params", artifact.params}};
  if (artifact.report) j["report"] = *artifact.report;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

CalibrationArtifact read_calibration_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open calibration artifact " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    const int version = j.at("schema_version").get<int>();
    if (version != CalibrationArtifact::kSchemaVersion) {
      throw DataError(path.string() + ": unsupported schema_version " + std::to_string(version));
    }
    CalibrationArtifact a;
    a.params = j.at("params").get<CalibrationParams>();
    a.config_hash = j.value("config_hash", std::string());
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed calibration artifact: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace policytwin
