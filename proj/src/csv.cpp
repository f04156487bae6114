#include "attrprop/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "attrprop/error.hpp"

namespace attrprop {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::schema_error: return "schema-error";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::duplicate_id: return "duplicate-id";
    case ErrorCode::degenerate_attribute: return "degenerate-attribute";
    case ErrorCode::undefined_correlation: return "undefined-correlation";
    case ErrorCode::insufficient_nodes: return "insufficient-nodes";
    case ErrorCode::isolated_node: return "isolated-node";
    case ErrorCode::no_labeled_data: return "no-labeled-data";
    case ErrorCode::empty_class: return "empty-class";
    case ErrorCode::size_limit: return "size-limit";
    case ErrorCode::nonpositive_box: return "nonpositive-box";
    case ErrorCode::degenerate_trait: return "degenerate-trait";
    case ErrorCode::id_mismatch: return "id-mismatch";
    case ErrorCode::one_class_absent: return "one-class-absent";
    case ErrorCode::empty_set: return "empty-set";
    case ErrorCode::infeasible_correlation: return "infeasible-correlation";
    case ErrorCode::invalid_config: return "invalid-config";
  }
  return "unknown";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw_error(ErrorCode::io_error, "cannot open file: " + path);
  }
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) {
      continue;
    }
    auto cells = split_csv_line(line);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) {
    throw_error(ErrorCode::schema_error, "missing header row in " + path);
  }
  return table;
}

std::string format_double(Scalar value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Scalar parse_double(const std::string& cell, const std::string& context) {
  Scalar value = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || cell.empty()) {
    throw_error(ErrorCode::schema_error,
                "expected a number in " + context + ", got '" + cell + "'");
  }
  return value;
}

long parse_long(const std::string& cell, const std::string& context) {
  long value = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || cell.empty()) {
    throw_error(ErrorCode::schema_error,
                "expected an integer in " + context + ", got '" + cell + "'");
  }
  return value;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw_error(ErrorCode::io_error, "cannot write file: " + path);
  }
  out << content;
  if (!out) {
    throw_error(ErrorCode::io_error, "write failed: " + path);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw_error(ErrorCode::io_error, "cannot open file: " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace attrprop
