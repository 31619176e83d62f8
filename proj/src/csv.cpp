#include "swphm/csv.hpp"

#include "swphm/error.hpp"

#include <charconv>

namespace swphm::csv {

Table parse(std::string_view text) {
    Table table;
    std::vector<Row> records;
    std::vector<std::size_t> starts;

    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t row_line = 1;

    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
        text.remove_prefix(3);
    }

    auto end_row = [&] {
        row.push_back(std::move(field));
        field.clear();
        // blank lines are skipped
        if (!(row.size() == 1 && row.front().empty() && !field_started)) {
            records.push_back(std::move(row));
            starts.push_back(row_line);
        }
        row.clear();
        field_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty()) {
                fail(ErrorCode::validation,
                     "csv line " + std::to_string(line) + ": stray quote inside unquoted field");
            }
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            row.push_back(std::move(field));
            field.clear();
            field_started = true;
            break;
        case '\r':
            break;
        case '\n':
            end_row();
            ++line;
            row_line = line;
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) {
        fail(ErrorCode::validation, "csv line " + std::to_string(row_line) + ": unterminated quoted field");
    }
    if (field_started || !row.empty()) end_row();

    if (records.empty()) fail(ErrorCode::validation, "csv: missing header row");
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            fail(ErrorCode::validation, "csv line " + std::to_string(starts[r]) + ": expected " +
                                            std::to_string(table.header.size()) + " fields, got " +
                                            std::to_string(records[r].size()));
        }
        table.rows.push_back(std::move(records[r]));
        table.line_numbers.push_back(starts[r]);
    }
    return table;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_row(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(row[i]);
    }
    out.push_back('\n');
    return out;
}

std::string format_number(double value) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, result.ptr);
}

} // namespace swphm::csv
