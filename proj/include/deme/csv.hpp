#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deme/error.hpp"
#include "deme/util.hpp"

namespace deme {

// A parsed CSV row: first cell as text, remaining cells numeric or empty.
struct CsvRow {
  std::string label;
  std::vector<std::optional<double>> cells;
};

inline std::vector<CsvRow> parse_numeric_csv(std::string_view text, std::string_view expected_header) {
  auto lines = util::split_lines(text);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines.front() != expected_header)
    throw Error(ErrorCode::FormatError, "unexpected CSV header");
  std::vector<CsvRow> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    CsvRow row;
    std::stringstream ss(lines[li]);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        row.label = cell;
        first = false;
        continue;
      }
      if (cell.empty()) {
        row.cells.emplace_back();
      } else {
        try {
          std::size_t used = 0;
          row.cells.emplace_back(std::stod(cell, &used));
          if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          throw Error(ErrorCode::FormatError, "non-numeric cell '" + cell + "' on line " + std::to_string(li + 1));
        }
      }
    }
    // a trailing empty cell is dropped by getline
    if (!lines[li].empty() && lines[li].back() == ',') row.cells.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace deme
