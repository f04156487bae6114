// Minimal CSV reading/writing. The file formats used here are plain
// comma-separated tables without quoting or embedded commas.
#pragma once

#include <string>
#include <vector>

#include "attrprop/types.hpp"

namespace attrprop {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

// Shortest decimal text that round-trips the exact double value.
std::string format_double(Scalar value);

// Strict double parse of an entire cell; throws schema_error otherwise.
Scalar parse_double(const std::string& cell, const std::string& context);

// Strict integer parse; throws schema_error otherwise.
long parse_long(const std::string& cell, const std::string& context);

void write_text_file(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

}  // namespace attrprop
