#include "policytwin/ingest.hpp"

#include <algorithm>
#include <fstream>

#include "policytwin/csv.hpp"
#include "policytwin/error.hpp"

namespace policytwin {

const MetricRow* MetricSeries::find(Date date) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), date,
                             [](const MetricRow& r, Date d) { return r.date < d; });
  return (it != rows.end() && it->date == date) ? &*it : nullptr;
}

void MetricSeries::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].values.size() != keys.size()) {
      throw DataError("row " + format_date(rows[i].date) + " has the wrong number of categories");
    }
    if (i > 0 && !(rows[i - 1].date < rows[i].date)) {
      throw DataError("series dates are not strictly increasing at " + format_date(rows[i].date));
    }
  }
}

ObservationColumns ObservationColumns::from_schema(const CategorySchema& schema) {
  ObservationColumns cols;
  for (const auto& spec : schema.specs()) cols.categories.emplace_back(spec.key, spec.observed_column);
  return cols;
}

namespace {

std::size_t require_column(const CsvTable& table, const std::string& name, const std::string& source) {
  auto idx = table.column(name);
  if (!idx) throw DataError(source + ": missing column '" + name + "'");
  return *idx;
}

std::vector<std::pair<std::size_t, std::string>> resolve_filters(
    const CsvTable& table, const std::map<std::string, std::string>& filters, const std::string& source) {
  std::vector<std::pair<std::size_t, std::string>> out;
  for (const auto& [col, value] : filters) out.emplace_back(require_column(table, col, source), value);
  return out;
}

bool passes(const std::vector<std::string>& row,
            const std::vector<std::pair<std::size_t, std::string>>& filters) {
  return std::all_of(filters.begin(), filters.end(),
                     [&](const auto& f) { return row[f.first] == f.second; });
}

bool is_empty_field(const std::string& s) {
  return s.find_first_not_of(" \t") == std::string::npos;
}

Date row_date(const std::string& text, std::size_t row, const std::string& source) {
  try {
    return parse_date(text);
  } catch (const DataError&) {
    throw DataError(source + ": row " + std::to_string(row) + ": unparseable date '" + text + "'");
  }
}

double row_number(const std::string& text, std::size_t row, const std::string& column,
                  const std::string& source) {
  auto v = parse_number(text);
  if (!v) {
    throw DataError(source + ": row " + std::to_string(row) + ": " + column + " value '" + text +
                    "' is not a number");
  }
  return *v;
}

void check_index(double v, std::size_t row, const std::string& column, const std::string& source) {
  if (v < 0.0 || v > 100.0) {
    throw DataError(source + ": row " + std::to_string(row) + ": " + column + " " + std::to_string(v) +
                    " outside [0,100]");
  }
}

}  // namespace

PolicyLoad load_policy_csv(const std::filesystem::path& path, const PolicyColumns& columns) {
  const std::string source = path.string();
  const CsvTable table = read_csv(path);
  const std::size_t date_col = require_column(table, columns.date, source);
  const std::size_t str_col = require_column(table, columns.stringency, source);
  std::optional<std::size_t> gov_col;
  if (columns.government_response) gov_col = require_column(table, *columns.government_response, source);
  const auto filters = resolve_filters(table, columns.filters, source);

  PolicyLoad out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t row_no = i + 1;
    ++out.report.rows_read;
    if (!passes(row, filters)) {
      ++out.report.rows_filtered;
      continue;
    }
    PolicyRecord rec;
    rec.date = row_date(row[date_col], row_no, source);
    if (is_empty_field(row[str_col])) {
      ++out.report.rows_dropped;
      out.report.notes.push_back("row " + std::to_string(row_no) + " (" + format_date(rec.date) +
                                 "): missing stringency, dropped");
      continue;
    }
    rec.stringency = row_number(row[str_col], row_no, columns.stringency, source);
    check_index(rec.stringency, row_no, columns.stringency, source);
    if (gov_col && !is_empty_field(row[*gov_col])) {
      rec.government_response = row_number(row[*gov_col], row_no, *columns.government_response, source);
      check_index(*rec.government_response, row_no, *columns.government_response, source);
    }
    out.records.push_back(rec);
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const PolicyRecord& a, const PolicyRecord& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < out.records.size(); ++i) {
    if (out.records[i].date == out.records[i - 1].date) {
      throw DataError(source + ": duplicate date " + format_date(out.records[i].date));
    }
  }
  out.report.rows_kept = out.records.size();
  return out;
}

ObservationLoad load_observations_csv(const std::filesystem::path& path, const ObservationColumns& columns) {
  const std::string source = path.string();
  const CsvTable table = read_csv(path);
  const std::size_t date_col = require_column(table, columns.date, source);
  std::vector<std::string> keys;
  std::vector<std::size_t> value_cols;
  for (const auto& [key, col] : columns.categories) {
    keys.push_back(key);
    value_cols.push_back(require_column(table, col, source));
  }
  const auto filters = resolve_filters(table, columns.filters, source);

  ObservationLoad out;
  out.series.keys = CategoryKeys(keys);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t row_no = i + 1;
    ++out.report.rows_read;
    if (!passes(row, filters)) {
      ++out.report.rows_filtered;
      continue;
    }
    MetricRow rec;
    rec.date = row_date(row[date_col], row_no, source);
    bool missing = false;
    for (std::size_t k = 0; k < value_cols.size(); ++k) {
      const auto& text = row[value_cols[k]];
      if (is_empty_field(text)) {
        missing = true;
        out.report.notes.push_back("row " + std::to_string(row_no) + " (" + format_date(rec.date) +
                                   "): missing " + columns.categories[k].second + ", record excluded");
        break;
      }
      rec.values.push_back(row_number(text, row_no, columns.categories[k].second, source));
    }
    if (missing) {
      ++out.report.rows_dropped;
      continue;
    }
    out.series.rows.push_back(std::move(rec));
  }
  std::stable_sort(out.series.rows.begin(), out.series.rows.end(),
                   [](const MetricRow& a, const MetricRow& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < out.series.rows.size(); ++i) {
    if (out.series.rows[i].date == out.series.rows[i - 1].date) {
      throw DataError(source + ": duplicate date " + format_date(out.series.rows[i].date));
    }
  }
  out.report.rows_kept = out.series.rows.size();
  return out;
}

void write_observations_csv(const std::filesystem::path& path, const ObservationSeries& series,
                            std::string_view date_column, std::span<const std::string> comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& c : comments) out << '#' << c << '\n';
  out << csv_escape(date_column);
  for (const auto& k : series.keys) out << ',' << csv_escape(k);
  out << '\n';
  for (const auto& row : series.rows) {
    out << format_date(row.date);
    for (double v : row.values) out << ',' << format_number(v);
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_policy_csv(const std::filesystem::path& path, std::span<const PolicyRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "date,stringency,government_response\n";
  for (const auto& r : records) {
    out << format_date(r.date) << ',' << format_number(r.stringency) << ',';
    if (r.government_response) out << format_number(*r.government_response);
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::string_view to_string(SplitName split) {
  switch (split) {
    case SplitName::kTrain: return "train";
    case SplitName::kValidation: return "validation";
    case SplitName::kTest: return "test";
  }
  return "?";
}

SplitName parse_split_name(std::string_view text) {
  if (text == "train") return SplitName::kTrain;
  if (text == "validation" || text == "val") return SplitName::kValidation;
  if (text == "test") return SplitName::kTest;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

void TemporalSplit::validate() const {
  const std::pair<const char*, const DateRange*> ranges[] = {
      {"train", &train}, {"validation", &validation}, {"test", &test}};
  for (const auto& [name, r] : ranges) {
    if (r->last < r->first) throw ConfigError(std::string(name) + " range ends before it starts");
  }
  if (train.overlaps(validation) || train.overlaps(test) || validation.overlaps(test)) {
    throw ConfigError("split ranges overlap: train " + format_date(train.first) + ".." +
                      format_date(train.last) + ", validation " + format_date(validation.first) + ".." +
                      format_date(validation.last) + ", test " + format_date(test.first) + ".." +
                      format_date(test.last));
  }
  if (!(train.last < validation.first && validation.last < test.first)) {
    throw ConfigError("split ranges must be ordered train < validation < test");
  }
}

const DateRange& TemporalSplit::range(SplitName split) const {
  switch (split) {
    case SplitName::kTrain: return train;
    case SplitName::kValidation: return validation;
    case SplitName::kTest: return test;
  }
  return test;
}

std::optional<SplitName> TemporalSplit::classify(Date date) const {
  if (train.contains(date)) return SplitName::kTrain;
  if (validation.contains(date)) return SplitName::kValidation;
  if (test.contains(date)) return SplitName::kTest;
  return std::nullopt;
}

std::array<MetricSeries, 3> split_series(const MetricSeries& series, const TemporalSplit& split) {
  auto parts = split_by_dates(std::span<const MetricRow>(series.rows), split);
  return {MetricSeries{series.keys, std::move(parts.train)},
          MetricSeries{series.keys, std::move(parts.validation)},
          MetricSeries{series.keys, std::move(parts.test)}};
}

}  // namespace policytwin
