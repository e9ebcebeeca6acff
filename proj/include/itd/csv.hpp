#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace itd {

// RFC-4180 field reader: quoted fields may contain commas, doubled quotes
// and line breaks. Accepts both LF and CRLF row endings.
class CsvReader {
  public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // nullopt at end of input; otherwise the fields of one record.
    std::optional<std::vector<std::string>> next_row();

    // 1-based physical line on which the last returned record started.
    std::size_t row_start_line() const { return row_start_line_; }

  private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t row_start_line_ = 0;
};

std::string csv_quote(std::string_view field);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace itd
