#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace clcts::csv {

/// One parsed record together with the 1-based line it started on.
struct Record {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, double-quote escaping, CRLF or LF line
/// ends, embedded newlines inside quoted fields. Blank lines are skipped.
/// Throws ValidationError naming `source` and the line on malformed quoting.
std::vector<Record> parse(std::istream& in, const std::string& source);

/// Reads a file and checks that its first record equals `expected_header`.
/// Returns the data records (header excluded).
std::vector<Record> read_file(const std::string& path,
                              const std::vector<std::string>& expected_header);

/// Quotes a field when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace clcts::csv
