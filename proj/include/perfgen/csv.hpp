#pragma once

#include <string>
#include <vector>

namespace perfgen::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 if absent
};

/// Reads a comma-separated file. No quoting support; fields are trimmed of
/// surrounding whitespace. Throws ValidationError on I/O failure.
Table read_file(const std::string& path);

/// Validates that the table header equals `expected` (exact order).
/// Throws ValidationError naming the file otherwise.
void require_header(const Table& t, const std::vector<std::string>& expected,
                    const std::string& path);

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

/// Formats a double with enough digits to round-trip bit-exactly.
std::string format_double(double v);

/// Parses a double/int, throwing ValidationError with row context on failure.
double parse_double(const std::string& s, const std::string& path, size_t row);
long parse_long(const std::string& s, const std::string& path, size_t row);

} // namespace perfgen::csv
