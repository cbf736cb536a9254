#ifndef MORALFRAME_CSV_H_
#define MORALFRAME_CSV_H_

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace moralframe {

// RFC 4180 style table: one header row, double-quote quoting, fields may
// span lines when quoted. A delimiter other than ',' is accepted for TSV.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  // First of `names` present in the header.
  std::optional<std::size_t> find_any(
      std::initializer_list<std::string_view> names) const;
};

// Throws DataError on unterminated quotes, ragged rows or a missing header.
CsvTable parse_csv(std::istream& in, char delimiter = ',',
                   std::string_view origin = "<stream>");
// Picks a tab delimiter for *.tsv files or when the header contains a tab.
CsvTable read_csv(const std::string& path);

std::string csv_escape(std::string_view field, char delimiter = ',');
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

// "%.17g"; round-trips bit-exactly through strtod.
std::string format_double(double value);

// Strict full-field parse; std::nullopt on anything else (including
// non-finite values).
std::optional<double> parse_double_field(std::string_view field);

}  // namespace moralframe

#endif  // MORALFRAME_CSV_H_
