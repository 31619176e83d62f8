#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace swphm::csv {

using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line of each row
};

// Comma-separated, double-quote escaping, header row mandatory.
Table parse(std::string_view text);

std::string escape(std::string_view field);
std::string format_row(const Row& row);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

} // namespace swphm::csv
