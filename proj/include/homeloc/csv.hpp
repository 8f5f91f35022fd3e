#pragma once
// Minimal RFC-4180 CSV reading and writing.
//
// Reads accept quoted fields (with doubled quotes and embedded newlines) and
// CRLF line endings. Writes use LF and quote only when a field needs it.

#include "homeloc/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace homeloc::csv {

struct Row {
    std::size_t line = 0;  // 1-based physical line where the record starts
    std::vector<std::string> fields;
};

struct Table {
    std::string source;
    Row header;
    std::vector<Row> rows;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

// Parses text into header + rows. Blank lines are skipped. A missing header
// is a SchemaMismatch.
inline Table parse(std::string_view text, std::string source) {
    Table table;
    table.source = std::move(source);

    std::size_t line = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool have_header = false;

    while (i < n) {
        Row row;
        row.line = line;
        std::string field;
        bool in_quotes = false;
        bool field_was_quoted = false;
        bool row_done = false;
        bool row_empty = true;

        while (i < n && !row_done) {
            const char c = text[i];
            if (in_quotes) {
                if (c == '"') {
                    if (i + 1 < n && text[i + 1] == '"') {
                        field.push_back('"');
                        i += 2;
                        continue;
                    }
                    in_quotes = false;
                    ++i;
                    continue;
                }
                if (c == '\n') ++line;
                field.push_back(c);
                ++i;
                continue;
            }
            switch (c) {
                case '"':
                    if (!field.empty() || field_was_quoted) {
                        throw ParseError(table.source, line, "unexpected quote inside unquoted field");
                    }
                    in_quotes = true;
                    field_was_quoted = true;
                    row_empty = false;
                    ++i;
                    break;
                case ',':
                    row.fields.push_back(std::move(field));
                    field.clear();
                    field_was_quoted = false;
                    row_empty = false;
                    ++i;
                    break;
                case '\r':
                    if (i + 1 < n && text[i + 1] == '\n') {
                        ++i;
                        break;
                    }
                    throw ParseError(table.source, line, "bare carriage return");
                case '\n':
                    ++line;
                    ++i;
                    row_done = true;
                    break;
                default:
                    if (field_was_quoted) {
                        throw ParseError(table.source, line, "characters after closing quote");
                    }
                    field.push_back(c);
                    row_empty = false;
                    ++i;
                    break;
            }
        }
        if (in_quotes) throw ParseError(table.source, row.line, "unterminated quoted field");
        if (row_empty && field.empty()) continue;
        row.fields.push_back(std::move(field));

        if (!have_header) {
            table.header = std::move(row);
            have_header = true;
        } else {
            table.rows.push_back(std::move(row));
        }
    }
    if (!have_header) throw Error(ErrorKind::SchemaMismatch, table.source + ": missing header row");
    return table;
}

inline Table read(const std::string& path) { return parse(read_file(path), path); }

inline bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\n\r") != std::string_view::npos;
}

inline void append_field(std::string& out, std::string_view field) {
    if (!needs_quoting(field)) {
        out.append(field);
        return;
    }
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

inline void append_row(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        append_field(out, fields[i]);
    }
    out.push_back('\n');
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error(ErrorKind::IoError, "cannot format number");
    return std::string(buf, ptr);
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

// Maps each expected column to its index in the header. Every expected
// column must be present; each entry may list accepted aliases.
inline std::vector<std::size_t> resolve_columns(const Table& table,
                                                const std::vector<std::vector<std::string>>& expected) {
    std::vector<std::size_t> index;
    index.reserve(expected.size());
    for (const auto& aliases : expected) {
        bool found = false;
        for (std::size_t c = 0; c < table.header.fields.size() && !found; ++c) {
            for (const auto& alias : aliases) {
                if (table.header.fields[c] == alias) {
                    index.push_back(c);
                    found = true;
                    break;
                }
            }
        }
        if (!found) {
            throw Error(ErrorKind::SchemaMismatch,
                        table.source + ": header is missing column '" + aliases.front() + "'");
        }
    }
    return index;
}

inline const std::string& field(const Table& table, const Row& row, std::size_t column) {
    if (column >= row.fields.size()) {
        throw ParseError(table.source, row.line,
                         "expected at least " + std::to_string(column + 1) + " fields, got " +
                             std::to_string(row.fields.size()));
    }
    return row.fields[column];
}

}  // namespace homeloc::csv
