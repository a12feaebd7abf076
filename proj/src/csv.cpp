#include "fiml/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fiml/errors.hpp"

namespace fiml {

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    // skip leading spaces so hand-edited files are accepted
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    auto res = std::from_chars(first, last, v);
    const char* tail = res.ptr;
    while (tail != last && (*tail == ' ' || *tail == '\t' || *tail == '\r')) ++tail;
    if (res.ec != std::errc{} || tail != last)
        throw ParseError(context + ": not a number: '" + text + "'");
    return v;
}

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ParseError("CSV is missing required column '" + name + "'");
}

double CsvTable::num(std::size_t row, std::size_t col_index) const {
    std::ostringstream ctx;
    ctx << "row " << row + 1 << ", column '" << header.at(col_index) << "'";
    return parse_double(rows.at(row).at(col_index), ctx.str());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_fields(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            std::ostringstream msg;
            msg << path << ":" << lineno << ": expected " << t.header.size()
                << " fields, got " << fields.size();
            throw ParseError(msg.str());
        }
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw ParseError(path + ": empty file");
    return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    auto write_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    };
    write_row(table.header);
    for (const auto& r : table.rows) write_row(r);
    if (!out) throw ParseError(path + ": write failed");
}

void write_csv_numeric(const std::string& path,
                       const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size())
        throw ParseError(path + ": header/column count mismatch");
    CsvTable t;
    t.header = header;
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
        if (c.size() != n) throw ParseError(path + ": ragged columns");
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<std::string> row;
        row.reserve(columns.size());
        for (const auto& c : columns) row.push_back(fmt_double(c[r]));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

} // namespace fiml
