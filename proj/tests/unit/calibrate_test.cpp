#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "policytwin/calibrate.hpp"
#include "policytwin/error.hpp"
#include "policytwin/tpe.hpp"
#include "test_support.hpp"

namespace policytwin {
namespace {

CategorySchema schema2() {
  return CategorySchema({{"a", "col_a", "A", -1, -100, 200}, {"b", "col_b", "B", 1, -100, 200}});
}

// pbar on a grid in [0.1, 0.9]; observed = slope * p + intercept, then clipped to [lo, hi].
TrainingSet make_set(std::vector<std::pair<double, double>> lines, std::size_t n = 120, double lo = -1e9,
                     double hi = 1e9) {
  TrainingSet t;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < lines.size(); ++k) names.push_back(k == 0 ? "a" : "b");
  t.keys = CategoryKeys(names);
  t.pbar.resize(lines.size());
  t.observed.resize(lines.size());
  for (std::size_t i = 0; i < n; ++i) {
    t.dates.push_back(testing::day_offset(testing::day("2020-04-01"), static_cast<int>(i)));
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const double p = 0.1 + 0.8 * std::fmod(0.37 * static_cast<double>(i) + 0.11 * static_cast<double>(k), 1.0);
      t.pbar[k].push_back(p);
      t.observed[k].push_back(std::clamp(lines[k].first * p + lines[k].second, lo, hi));
    }
  }
  return t;
}

TEST(Calibration, ApplyAndClip) {
  const CategoryCalibration c{"a", -200.0, 100.0, -100.0, 200.0};
  EXPECT_DOUBLE_EQ(c.apply(0.9), -80.0);
  EXPECT_EQ(c.apply(0.0), 100.0);
  const CategoryCalibration steep{"a", 400.0, 0.0, -100.0, 200.0};
  EXPECT_EQ(steep.apply(0.9), 200.0);
  const CategoryCalibration open{"a", 400.0, 0.0, -kUnbounded, kUnbounded};
  EXPECT_EQ(open.apply(0.9), 360.0);
  CalibrationParams params{{c, {"b", 10.0, 1.0, -100, 200}}};
  const auto m = apply_calibration(BehaviorVector(testing::keys_of({"a", "b"}), {0.9, 0.5}), params);
  EXPECT_DOUBLE_EQ(m.values[0], -80.0);
  EXPECT_EQ(m.values[1], 6.0);
  EXPECT_THROW(apply_calibration(BehaviorVector(testing::keys_of({"z"}), {0.5}), params), DataError);
}

TEST(Calibration, ParamsValidation) {
  EXPECT_THROW((CalibrationParams{{{"a", 1, 0, 5, 5}}}.validate()), ConfigError);
  EXPECT_THROW((CalibrationParams{{{"a", NAN, 0, -1, 1}}}.validate()), ConfigError);
  EXPECT_THROW(CalibrationParams{}.validate(), ConfigError);
}

TEST(LeastSquares, RecoversALine) {
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(i / 49.0);
    y.push_back(-150.0 * x.back() + 50.0);
  }
  const auto fit = least_squares_line(x, y);
  EXPECT_NEAR(fit.slope, -150.0, 1e-9);
  EXPECT_NEAR(fit.intercept, 50.0, 1e-9);
  EXPECT_FALSE(fit.degenerate);
}

TEST(LeastSquares, DegenerateInputs) {
  const std::vector<double> x{0.5, 0.5, 0.5}, y{1.0, 2.0, 6.0};
  const auto fit = least_squares_line(x, y);
  EXPECT_TRUE(fit.degenerate);
  EXPECT_EQ(fit.slope, 0.0);
  EXPECT_EQ(fit.intercept, 3.0);
  EXPECT_THROW(least_squares_line({}, {}), DataError);
  const std::vector<double> short_y{1.0};
  EXPECT_THROW(least_squares_line(x, short_y), DataError);
}

TEST(Tpe, FindsTheMinimumOfABowl) {
  const std::vector<Interval> space{{-100, 100}, {-100, 100}};
  auto bowl = [](std::span<const double> x) { return std::hypot(x[0] - 30.0, x[1] + 20.0); };
  TpeSampler sampler(space, 5);
  const auto result = minimize(bowl, {-90.0, 90.0}, 200, sampler);
  EXPECT_EQ(result.trials.size(), 200u);
  EXPECT_LT(result.best().loss, 5.0);
}

TEST(Tpe, BeatsRandomSearchOnAverage) {
  const std::vector<Interval> space{{-100, 100}, {-100, 100}};
  auto bowl = [](std::span<const double> x) { return std::hypot(x[0] - 30.0, x[1] + 20.0); };
  double tpe_total = 0.0, random_total = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    TpeSampler tpe(space, seed);
    RandomSampler random(space, seed);
    tpe_total += minimize(bowl, {-90.0, 90.0}, 100, tpe).best().loss;
    random_total += minimize(bowl, {-90.0, 90.0}, 100, random).best().loss;
  }
  EXPECT_LT(tpe_total, random_total);
}

TEST(Tpe, IsDeterministicPerSeedAndStaysInBounds) {
  const std::vector<Interval> space{{-1, 1}, {10, 20}};
  auto f = [](std::span<const double> x) { return x[0] * x[0] + std::abs(x[1] - 12.0); };
  TpeSampler a(space, 9), b(space, 9);
  const auto ra = minimize(f, {0.5, 15.0}, 60, a);
  const auto rb = minimize(f, {0.5, 15.0}, 60, b);
  for (std::size_t i = 0; i < ra.trials.size(); ++i) {
    EXPECT_EQ(ra.trials[i].x, rb.trials[i].x);
    EXPECT_TRUE(space[0].contains(ra.trials[i].x[0]));
    EXPECT_TRUE(space[1].contains(ra.trials[i].x[1]));
  }
}

TEST(Tpe, InitializerWinsTies) {
  const std::vector<Interval> space{{0, 1}};
  RandomSampler sampler(space, 1);
  const auto r = minimize([](std::span<const double>) { return 1.0; }, {0.5}, 20, sampler);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_THROW(minimize([](std::span<const double>) { return 1.0; }, {0.5}, 0, sampler), ConfigError);
  EXPECT_THROW(TpeSampler({{1, 1}}, 0), ConfigError);
}

TEST(Fit, ExactRecoveryWithoutClipping) {
  const TrainingSet data = make_set({{-120.0, 30.0}, {40.0, -10.0}});
  FitConfig config;
  config.seed = 3;
  const auto fit = fit_calibration(data, schema2(), config);
  ASSERT_EQ(fit.params.categories.size(), 2u);
  EXPECT_NEAR(fit.params.categories[0].slope, -120.0, 1e-9);
  EXPECT_NEAR(fit.params.categories[0].intercept, 30.0, 1e-9);
  EXPECT_NEAR(fit.params.categories[1].slope, 40.0, 1e-9);
  EXPECT_EQ(fit.params.categories[1].clip_max, 200.0);
  EXPECT_LT(fit.report.categories[0].best_loss, 1e-9);
  EXPECT_EQ(fit.report.categories[0].trials, 200);
}

TEST(Fit, SearchImprovesOnLeastSquaresWhenClippingBinds) {
  // Targets saturate at the clip bound, which biases the unclipped least-squares line.
  const TrainingSet data = make_set({{600.0, -250.0}}, 200, -100.0, 200.0);
  const CategorySchema schema({{"a", "col_a", "A", 1, -100, 200}});
  FitConfig config;
  config.slope_range = {-1000, 1000};
  config.intercept_range = {-500, 500};
  config.seed = 1;
  const auto fit = fit_calibration(data, schema, config);
  const auto& r = fit.report.categories[0];
  EXPECT_LT(r.best_loss, 0.5 * r.init_loss);
  EXPECT_GT(r.best_trial, 0);
}

TEST(Fit, CategoriesAreIndependent) {
  const TrainingSet base = make_set({{-120.0, 30.0}, {40.0, -10.0}});
  TrainingSet changed = base;
  for (auto& v : changed.observed[1]) v = v * 0.5 + 3.0 * std::sin(v);
  FitConfig config;
  config.seed = 11;
  const auto a = fit_calibration(base, schema2(), config);
  const auto b = fit_calibration(changed, schema2(), config);
  EXPECT_EQ(a.params.categories[0], b.params.categories[0]);
  EXPECT_NE(a.params.categories[1], b.params.categories[1]);
}

TEST(Fit, WidensTheRangeToIncludeTheInitializer) {
  const TrainingSet data = make_set({{-900.0, 30.0}});
  const CategorySchema schema({{"a", "col_a", "A", -1, -1e6, 1e6}});
  FitConfig config;
  const auto fit = fit_calibration(data, schema, config);
  EXPECT_TRUE(fit.report.categories[0].range_widened);
  ASSERT_FALSE(fit.report.warnings.empty());
  EXPECT_NEAR(fit.params.categories[0].slope, -900.0, 1e-6);
}

TEST(Fit, LeastSquaresInitSamplerEvaluatesOnlyTheInitializer) {
  FitConfig config;
  config.sampler = SamplerKind::kLeastSquaresInit;
  const auto fit = fit_calibration(make_set({{-50.0, 10.0}, {20.0, 0.0}}), schema2(), config);
  EXPECT_EQ(fit.report.trials, 1);
  EXPECT_EQ(fit.report.categories[1].trials, 1);
}

TEST(Fit, MacroObjectiveAndNoClip) {
  FitConfig config;
  config.objective = FitObjective::kMacroAverage;
  config.clip = false;
  config.trials = 40;
  const auto fit = fit_calibration(make_set({{-50.0, 10.0}, {20.0, 0.0}}), schema2(), config);
  EXPECT_NEAR(fit.params.categories[0].slope, -50.0, 1e-9);
  EXPECT_TRUE(std::isinf(fit.params.categories[1].clip_max));
  EXPECT_EQ(fit.report.categories[0].best_trial, 0);
}

TEST(Fit, SharedParametersFitAllCategoriesAtOnce) {
  const auto fit = fit_shared_calibration(make_set({{60.0, -10.0}, {60.0, -10.0}}), schema2(), FitConfig{});
  EXPECT_TRUE(fit.report.shared_parameters);
  EXPECT_NEAR(fit.params.categories[0].slope, 60.0, 1e-9);
  EXPECT_EQ(fit.params.categories[0].slope, fit.params.categories[1].slope);
  const auto worse = fit_shared_calibration(make_set({{60.0, -10.0}, {-60.0, 40.0}}), schema2(), FitConfig{});
  EXPECT_GT(worse.report.categories[0].best_loss, 1.0);
}

TEST(Fit, EmptyTrainingSetIsAnError) {
  TrainingSet empty;
  empty.keys = testing::keys_of({"a"});
  empty.pbar.resize(1);
  empty.observed.resize(1);
  EXPECT_THROW(fit_calibration(empty, schema2(), FitConfig{}), DataError);
}

TEST(Fit, AlignInnerJoinsOnDate) {
  const auto keys = testing::keys_of({"a"});
  const MetricSeries probs = testing::series_from(keys, testing::day("2020-04-01"), {{0.1}, {0.2}, {0.3}});
  const MetricSeries obs = testing::series_from(keys, testing::day("2020-04-02"), {{5}, {6}, {7}});
  const TrainingSet t = align_training_set(probs, obs);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.pbar[0], (std::vector<double>{0.2, 0.3}));
  EXPECT_EQ(t.observed[0], (std::vector<double>{5, 6}));
}

TEST(Fit, ConfigJsonRoundTrip) {
  FitConfig c;
  c.trials = 17;
  c.slope_range = {-5, 5};
  c.objective = FitObjective::kMacroAverage;
  c.sampler = SamplerKind::kRandom;
  c.tpe.gamma = 0.3;
  const nlohmann::json j = c;
  const FitConfig back = j.get<FitConfig>();
  EXPECT_EQ(back.trials, 17);
  EXPECT_EQ(back.slope_range, c.slope_range);
  EXPECT_EQ(back.objective, FitObjective::kMacroAverage);
  EXPECT_EQ(back.sampler, SamplerKind::kRandom);
  EXPECT_EQ(back.tpe.gamma, 0.3);
  EXPECT_THROW(parse_sampler_kind("grid"), ConfigError);
  FitConfig bad;
  bad.slope_range = {1, -1};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Fit, ArtifactRoundTripKeepsInfiniteBounds) {
  testing::TempDir dir;
  CalibrationArtifact a;
  a.params.categories = {{"a", 1.5, -2.0, -kUnbounded, 200.0}, {"b", 3.0, 0.25, -100.0, kUnbounded}};
  a.config_hash = "abc123";
  write_calibration_artifact(dir / "cal.json", a);
  const auto back = read_calibration_artifact(dir / "cal.json");
  EXPECT_EQ(back.params, a.params);
  EXPECT_EQ(back.config_hash, "abc123");
  testing::write_file(dir / "v2.json", R"({"schema_version": 2, "params": {"categories": []}})");
  EXPECT_THROW(read_calibration_artifact(dir / "v2.json"), DataError);
}

}  // namespace
}  // namespace policytwin
