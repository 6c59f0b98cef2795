#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace policytwin {

/// A parsed CSV file: one header row plus data rows. Lines starting with '#'
/// before the header are kept as comments.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by header name; nullopt when absent.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180 reader (quoted fields, doubled quotes, CRLF). Throws DataError
/// when the file cannot be opened or a row has the wrong field count.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::istream& in, const std::string& source_name);

/// Quotes a field only when needed.
std::string csv_escape(std::string_view field);

/// Shortest decimal text that round-trips to the same double ("90", "0.25").
std::string format_number(double value);

/// Strict decimal parse of the whole field (surrounding blanks allowed).
std::optional<double> parse_number(std::string_view text);

}  // namespace policytwin
