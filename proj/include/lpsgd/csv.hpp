#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace lpsgd {

/// Shortest decimal text that parses back to exactly `v` ('.' separator,
/// at most 17 significant digits). Non-finite values print as nan/inf/-inf.
std::string format_double(double v);

/// RFC 4180 field quoting: fields containing ',', '"', CR or LF are quoted.
std::string csv_escape(std::string_view field);

/// Comma-separated rows terminated by a single newline.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(std::initializer_list<std::string_view> names);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

}  // namespace lpsgd
