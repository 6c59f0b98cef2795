#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "policytwin/baseline.hpp"
#include "policytwin/error.hpp"
#include "policytwin/gbm.hpp"
#include "test_support.hpp"

namespace policytwin {
namespace {

using testing::day;
using testing::day_offset;

std::vector<PolicyRecord> policy_series(Date start, int days) {
  std::vector<PolicyRecord> out;
  for (int i = 0; i < days; ++i) {
    const double s = 50.0 + 30.0 * std::sin(i / 9.0) + 10.0 * std::cos(i / 3.7);
    out.push_back({day_offset(start, i), std::round(s * 100.0) / 100.0, std::nullopt});
  }
  return out;
}

TEST(Persistence, UsesTheLastEarlierObservation) {
  const auto keys = testing::keys_of({"a", "b"});
  ObservationSeries history{keys, {{day("2020-01-01"), {1, 10}}, {day("2020-01-02"), {2, 20}},
                                   {day("2020-01-05"), {5, 50}}}};
  const std::vector<Date> targets{day("2020-01-06"), day("2020-01-03"), day("2020-01-02"), day("2020-01-03")};
  const auto f = persistence_forecast(history, targets);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f.rows[0].date, day("2020-01-02"));
  EXPECT_EQ(f.rows[0].values, (std::vector<double>{1, 10}));
  EXPECT_EQ(f.rows[1].values, (std::vector<double>{2, 20}));
  EXPECT_EQ(f.rows[2].values, (std::vector<double>{5, 50}));
  const std::vector<Date> too_early{day("2020-01-01")};
  EXPECT_THROW(persistence_forecast(history, too_early), DataError);
}

TEST(Features, LagsAndCalendar) {
  const auto policy = policy_series(day("2020-03-01"), 60);
  const Date d = day("2020-04-15");
  const auto f = build_features(policy, d);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->lags[0], PolicyIndex(policy).stringency(d).value());
  EXPECT_EQ(f->lags[4], PolicyIndex(policy).stringency(d - std::chrono::days(28)).value());
  EXPECT_EQ(f->day_of_week, 2);
  EXPECT_EQ(f->month, 4);
  EXPECT_EQ(f->days_since_start, 45);
  EXPECT_EQ(f->values()[7], 45.0);
  EXPECT_EQ(FeatureVector::names()[0], "stringency_lag0");
}

TEST(Features, MissingLagExcludesTheDate) {
  auto policy = policy_series(day("2020-03-01"), 60);
  EXPECT_FALSE(build_features(policy, day("2020-03-20")).has_value());  // lag 28 precedes the data
  policy.erase(policy.begin() + 40);                                   // 2020-04-10
  EXPECT_FALSE(build_features(policy, day("2020-04-17")).has_value());
  EXPECT_TRUE(build_features(policy, day("2020-04-18")).has_value());
}

TEST(Trees, HandBuiltTreePredicts) {
  RegressionTree tree;
  tree.nodes = {{0, 50.0, 1, 2, 0.0}, {-1, 0.0, -1, -1, -10.0}, {-1, 0.0, -1, -1, -60.0}};
  const std::vector<double> low{49.99}, at{50.0}, high{80.0};
  EXPECT_EQ(tree.predict(low), -10.0);
  EXPECT_EQ(tree.predict(at), -60.0);
  EXPECT_EQ(tree.predict(high), -60.0);
  GbmEnsemble e{5.0, 0.5, {tree, tree}};
  EXPECT_EQ(e.predict(low), 5.0 - 10.0);
}

TEST(Gbm, HyperValidation) {
  GbmHyper h;
  EXPECT_NO_THROW(h.validate());
  h.learning_rate = 0.0;
  EXPECT_THROW(h.validate(), ConfigError);
  h = {};
  h.bins = 1;
  EXPECT_THROW(h.validate(), ConfigError);
  h = {};
  h.max_depth = 0;
  EXPECT_THROW(h.validate(), ConfigError);
}

TEST(Gbm, LearnsAStepExactly) {
  std::vector<double> rows, y;
  for (int i = 0; i < 200; ++i) {
    rows.push_back(i);
    y.push_back(i < 70 ? -10.0 : -60.0);
  }
  GbmHyper h;
  h.trees = 80;
  h.learning_rate = 0.5;
  h.max_depth = 1;
  const auto model = fit_boosted_trees(rows, 1, y, h, 0);
  const std::vector<double> a{10.0}, b{150.0};
  EXPECT_NEAR(model.predict(a), -10.0, 1e-6);
  EXPECT_NEAR(model.predict(b), -60.0, 1e-6);
}

TEST(Gbm, FitsTwiceTheCurrentStringency) {
  const auto policy = policy_series(day("2020-01-01"), 400);
  const PolicyIndex index(policy);
  std::vector<FeatureVector> features;
  std::vector<std::vector<double>> targets;
  for (int i = 28; i < 400; ++i) {
    auto f = build_features(index, day_offset(day("2020-01-01"), i));
    ASSERT_TRUE(f);
    features.push_back(*f);
    targets.push_back({2.0 * f->lags[0]});
  }
  double mean = 0.0, var = 0.0;
  for (const auto& t : targets) mean += t[0];
  mean /= static_cast<double>(targets.size());
  for (const auto& t : targets) var += (t[0] - mean) * (t[0] - mean);
  const double sd = std::sqrt(var / static_cast<double>(targets.size()));

  const auto model = fit_gbm(features, targets, testing::keys_of({"a"}), GbmHyper{}, 7);
  double sse = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double e = predict_gbm(model, features[i])[0] - targets[i][0];
    sse += e * e;
  }
  EXPECT_LE(std::sqrt(sse / static_cast<double>(features.size())), 0.05 * sd);
}

TEST(Gbm, TrainingLossNeverIncreases) {
  testing::Gen gen(3);
  std::vector<double> rows, y;
  for (int i = 0; i < 300; ++i) {
    const double a = gen.uniform(0, 100), b = gen.uniform(-5, 5);
    rows.insert(rows.end(), {a, b});
    y.push_back(std::sin(a / 10.0) * 20.0 + b * b + gen.uniform(-1, 1));
  }
  std::vector<double> trace;
  GbmHyper h;
  h.trees = 120;
  fit_boosted_trees(rows, 2, y, h, 1, &trace);
  ASSERT_EQ(trace.size(), 121u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-9) << "tree " << i;
  EXPECT_LT(trace.back(), 0.2 * trace.front());
}

TEST(Gbm, TooFewRowsGivesTheMean) {
  const std::vector<double> rows{1, 2, 3}, y{3, 6, 9};
  std::vector<double> trace;
  const auto m = fit_boosted_trees(rows, 1, y, GbmHyper{}, 0, &trace);
  EXPECT_TRUE(m.trees.empty());
  EXPECT_EQ(m.base, 6.0);
  EXPECT_EQ(trace.size(), 301u);
}

TEST(Gbm, SubsamplingIsSeeded) {
  testing::Gen gen(5);
  std::vector<double> rows, y;
  for (int i = 0; i < 100; ++i) {
    rows.push_back(gen.uniform(0, 1));
    y.push_back(rows.back() * 3);
  }
  GbmHyper h;
  h.trees = 20;
  h.subsample = 0.5;
  const auto a = fit_boosted_trees(rows, 1, y, h, 11);
  const auto b = fit_boosted_trees(rows, 1, y, h, 11);
  const auto c = fit_boosted_trees(rows, 1, y, h, 12);
  const std::vector<double> x{0.37};
  EXPECT_EQ(a.predict(x), b.predict(x));
  EXPECT_NE(a.predict(x), c.predict(x));
}

TEST(Gbm, RejectsBadInput) {
  const std::vector<FeatureVector> none;
  EXPECT_THROW(fit_gbm(none, {}, testing::keys_of({"a"}), GbmHyper{}, 0), DataError);
  const std::vector<FeatureVector> one(1);
  EXPECT_THROW(fit_gbm(one, {{1.0, 2.0}}, testing::keys_of({"a"}), GbmHyper{}, 0), DataError);
  const std::vector<double> rows{1.0}, y{NAN};
  EXPECT_THROW(fit_boosted_trees(rows, 1, y, GbmHyper{}, 0), DataError);
}

TEST(Gbm, ModelFileRoundTrip) {
  const auto policy = policy_series(day("2020-01-01"), 120);
  std::vector<FeatureVector> features;
  std::vector<std::vector<double>> targets;
  for (int i = 28; i < 120; ++i) {
    features.push_back(*build_features(policy, day_offset(day("2020-01-01"), i)));
    targets.push_back({features.back().lags[1] - 3.0, 0.5 * features.back().day_of_week});
  }
  GbmHyper h;
  h.trees = 25;
  const auto model = fit_gbm(features, targets, testing::keys_of({"a", "b"}), h, 2);
  testing::TempDir dir;
  write_gbm_model(dir / "gbm.json", model, "h1");
  const auto back = read_gbm_model(dir / "gbm.json");
  EXPECT_EQ(back.keys, model.keys);
  for (const auto& f : features) EXPECT_EQ(predict_gbm(back, f), predict_gbm(model, f));

  auto j = nlohmann::json(model);
  j["ensembles"][0]["trees"][0][0][2] = 0;  // child pointing at its parent
  EXPECT_THROW(j.get<GbmModel>(), DataError);
}

}  // namespace
}  // namespace policytwin
