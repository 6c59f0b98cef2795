#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "policytwin/categories.hpp"
#include "policytwin/ingest.hpp"

namespace policytwin {

struct RmseResult {
  double value = 0.0;
  std::size_t common_dates = 0;
  std::size_t prediction_only = 0;   // excluded: no observation
  std::size_t observation_only = 0;  // excluded: no prediction
};

/// Root-mean-squared error over the dates both series share. Throws
/// DataError on zero common dates or an unknown category.
RmseResult rmse(const MetricSeries& predictions, const ObservationSeries& observations,
                std::string_view category);

/// Unweighted mean over `required`; throws DataError if any is missing.
double macro_average(const std::map<std::string, double>& per_category, const CategoryKeys& required);

/// (reference - ours) / reference * 100; nullopt when reference is 0.
std::optional<double> improvement_pct(double reference, double ours);

/// Per-category RMSE of one method on one split.
struct MethodScores {
  std::string method;
  CategoryKeys keys;
  std::vector<double> rmse;
  double macro_rmse = 0.0;
  std::size_t n_dates = 0;  // dates scored (common to every category)
};

MethodScores score_method(std::string method, const MetricSeries& predictions,
                          const ObservationSeries& observations);

struct EvalReport {
  std::string split;
  std::string method;
  std::string reference;
  CategoryKeys keys;
  std::vector<double> rmse;
  std::vector<double> reference_rmse;
  std::vector<std::optional<double>> improvement_pct;
  double macro_rmse = 0.0;
  double reference_macro_rmse = 0.0;
  std::optional<double> macro_improvement_pct;
  std::size_t n_dates = 0;
};

/// Throws DataError unless both cover the same categories and date count.
EvalReport compare(const MethodScores& ours, const MethodScores& reference, std::string split);

void to_json(nlohmann::json& j, const EvalReport& r);

/// Category | <method columns...> | Δ% (ours vs reference) table with a
/// macro-average row. `methods` lists every column; `ours` and `reference`
/// name two of them.
std::string format_eval_table(const CategorySchema& schema, const std::vector<MethodScores>& methods,
                              const std::string& ours, const std::string& reference,
                              const std::string& title);

/// Long-format CSV: date, category, observed, then one column per method.
void write_plot_csv(const std::filesystem::path& path, const ObservationSeries& observed,
                    const std::vector<std::pair<std::string, const MetricSeries*>>& methods,
                    std::span<const std::string> comments = {});

}  // namespace policytwin
