#include "policytwin/eval.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>

#include "policytwin/csv.hpp"
#include "policytwin/error.hpp"

namespace policytwin {

RmseResult rmse(const MetricSeries& predictions, const ObservationSeries& observations, std::string_view category) {
  const auto kp = predictions.keys.index_of(category);
  const auto ko = observations.keys.index_of(category);
  if (!kp || !ko) throw DataError("rmse: unknown category '" + std::string(category) + "'");
  RmseResult r;
  double sse = 0.0;
  for (const auto& row : predictions.rows) {
    const MetricRow* obs = observations.find(row.date);
    if (!obs) {
      ++r.prediction_only;
      continue;
    }
    const double e = row.values[*kp] - obs->values[*ko];
    sse += e * e;
    ++r.common_dates;
  }
  r.observation_only = observations.rows.size() - r.common_dates;
  if (r.common_dates == 0) throw DataError("rmse: no common dates for '" + std::string(category) + "'");
  r.value = std::sqrt(sse / static_cast<double>(r.common_dates));
  return r;
}

double macro_average(const std::map<std::string, double>& per_category, const CategoryKeys& required) {
  if (required.empty()) throw DataError("macro average over no categories");
  double sum = 0.0;
  for (const auto& k : required) {
    auto it = per_category.find(k);
    if (it == per_category.end()) throw DataError("macro average: missing category '" + k + "'");
    sum += it->second;
  }
  return sum / static_cast<double>(required.size());
}

std::optional<double> improvement_pct(double reference, double ours) {
  if (reference == 0.0) return std::nullopt;
  return (reference - ours) / reference * 100.0;
}

MethodScores score_method(std::string method, const MetricSeries& predictions, const ObservationSeries& observations) {
  MethodScores s{std::move(method), observations.keys, {}, 0.0, 0};
  std::map<std::string, double> per;
  for (const auto& k : observations.keys) {
    const RmseResult r = rmse(predictions, observations, k);
    s.rmse.push_back(r.value);
    per[k] = r.value;
    s.n_dates = r.common_dates;
  }
  s.macro_rmse = macro_average(per, observations.keys);
  return s;
}

EvalReport compare(const MethodScores& ours, const MethodScores& reference, std::string split) {
  if (!(ours.keys == reference.keys)) throw DataError("compare: methods cover different categories");
  if (ours.n_dates != reference.n_dates) {
    throw DataError(fmt::format("compare: {} scored {} dates but {} scored {}", ours.method, ours.n_dates,
                                reference.method, reference.n_dates));
  }
  EvalReport r;
  r.split = std::move(split);
  r.method = ours.method;
  r.reference = reference.method;
  r.keys = ours.keys;
  r.rmse = ours.rmse;
  r.reference_rmse = reference.rmse;
  for (std::size_t k = 0; k < ours.rmse.size(); ++k) r.improvement_pct.push_back(improvement_pct(reference.rmse[k], ours.rmse[k]));
  r.macro_rmse = ours.macro_rmse;
  r.reference_macro_rmse = reference.macro_rmse;
  r.macro_improvement_pct = improvement_pct(reference.macro_rmse, ours.macro_rmse);
  r.n_dates = ours.n_dates;
  return r;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json cats = nlohmann::json::array();
  for (std::size_t k = 0; k < r.keys.size(); ++k) {
    cats.push_back({{"key", r.keys[k]},
                    {"rmse", r.rmse[k]},
                    {"reference_rmse", r.reference_rmse[k]},
                    {"improvement_pct", opt(r.improvement_pct[k])}});
  }
  j = nlohmann::json{{"split", r.split},
                     {"method", r.method},
                     {"reference", r.reference},
                     {"n_dates", r.n_dates},
                     {"categories", cats},
                     {"macro_rmse", r.macro_rmse},
                     {"reference_macro_rmse", r.reference_macro_rmse},
                     {"macro_improvement_pct", opt(r.macro_improvement_pct)}};
}

namespace {

std::string pct(const std::optional<double>& v) { return v ? fmt::format("{:+.1f}%", *v) : "n/a"; }

const MethodScores& find_method(const std::vector<MethodScores>& methods, const std::string& name) {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw DataError("no scores for method '" + name + "'");
}

}  // namespace

std::string format_eval_table(const CategorySchema& schema, const std::vector<MethodScores>& methods,
                              const std::string& ours, const std::string& reference, const std::string& title) {
  const MethodScores& a = find_method(methods, ours);
  const MethodScores& b = find_method(methods, reference);
  std::size_t label_width = std::string_view("Macro average").size();
  for (const auto& spec : schema.specs()) label_width = std::max(label_width, spec.label.size());

  std::string out = title + "\n";
  out += fmt::format("{:<{}}", "Category", label_width);
  for (const auto& m : methods) out += fmt::format(" | {:>12}", m.method);
  out += fmt::format(" | {:>8}\n", "delta");
  out += std::string(label_width + methods.size() * 15 + 11, '-') + "\n";
  for (std::size_t k = 0; k < a.keys.size(); ++k) {
    const auto idx = schema.index_of(a.keys[k]);
    const std::string& label = idx ? schema[*idx].label : a.keys[k];
    out += fmt::format("{:<{}}", label, label_width);
    for (const auto& m : methods) out += fmt::format(" | {:>12.2f}", m.rmse[k]);
    out += fmt::format(" | {:>8}\n", pct(improvement_pct(b.rmse[k], a.rmse[k])));
  }
  out += fmt::format("{:<{}}", "Macro average", label_width);
  for (const auto& m : methods) out += fmt::format(" | {:>12.2f}", m.macro_rmse);
  out += fmt::format(" | {:>8}\n", pct(improvement_pct(b.macro_rmse, a.macro_rmse)));
  out += fmt::format("dates scored: {}; delta = ({} - {}) / {}\n", a.n_dates, reference, ours, reference);
  return out;
}

void write_plot_csv(const std::filesystem::path& path, const ObservationSeries& observed,
                    const std::vector<std::pair<std::string, const MetricSeries*>>& methods,
                    std::span<const std::string> comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& c : comments) out << '#' << c << '\n';
  out << "date,category,observed";
  for (const auto& [name, series] : methods) out << ',' << csv_escape(name);
  out << '\n';
  for (const auto& row : observed.rows) {
    for (std::size_t k = 0; k < observed.keys.size(); ++k) {
      out << format_date(row.date) << ',' << csv_escape(observed.keys[k]) << ',' << format_number(row.values[k]);
      for (const auto& [name, series] : methods) {
        out << ',';
        const MetricRow* p = series->find(row.date);
        const auto kk = series->keys.index_of(observed.keys[k]);
        if (p && kk) out << format_number(p->values[*kk]);
      }
      out << '\n';
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace policytwin
