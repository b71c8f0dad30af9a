#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tutorlens::csv {

using Record = std::vector<std::string>;

// RFC 4180 reader: comma separated, double-quote quoting with "" escapes,
// LF or CRLF record ends, quoted fields may span lines. Physically empty
// lines are skipped. Throws Error(MalformedRow) with the record number
// (0 = first record) on unterminated quotes or stray characters after a
// closing quote.
std::vector<Record> parse(std::string_view input);

std::string quote_if_needed(std::string_view field);
// Joins with commas and terminates with LF.
std::string format_record(const Record& fields);

}  // namespace tutorlens::csv
