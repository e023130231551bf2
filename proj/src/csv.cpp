#include "perfgen/csv.hpp"

#include "perfgen/common.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace perfgen::csv {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

} // namespace

int Table::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (first) {
            t.header = fields;
            first = false;
        } else {
            t.rows.push_back(fields);
        }
    }
    if (first) throw ValidationError("empty CSV file: " + path);
    return t;
}

void require_header(const Table& t, const std::vector<std::string>& expected,
                    const std::string& path) {
    if (t.header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        std::string got;
        for (const auto& h : t.header) got += (got.empty() ? "" : ",") + h;
        throw ValidationError(path + ": expected header '" + want + "', got '" + got + "'");
    }
}

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write file: " + path);
    for (size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << row[i];
        out << "\n";
    }
    if (!out) throw ValidationError("write failed: " + path);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& path, size_t row) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE) {
        std::ostringstream os;
        os << path << ": parse error at row " << row << ": bad number '" << s << "'";
        throw ValidationError(os.str());
    }
    return v;
}

long parse_long(const std::string& s, const std::string& path, size_t row) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    long v = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0' || errno == ERANGE) {
        std::ostringstream os;
        os << path << ": parse error at row " << row << ": bad integer '" << s << "'";
        throw ValidationError(os.str());
    }
    return v;
}

} // namespace perfgen::csv
