#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace loyalty::csv {

// Splits one comma-delimited record. Double-quoted fields may contain commas
// and doubled quotes ("").
std::vector<std::string> split_line(std::string_view line, char delimiter = ',');

// Quotes a field only when it contains a delimiter, quote or line break.
std::string escape(std::string_view field);

// Reads the next line without its LF / CRLF terminator. Returns false at end of stream.
bool read_line(std::istream& in, std::string& line);

// Shortest decimal text that parses back to the same double ("inf" for +infinity).
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace loyalty::csv
