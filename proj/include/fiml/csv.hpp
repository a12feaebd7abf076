/// @file csv.hpp
/// @brief Plain CSV tables plus the one number formatter used for every artifact.
///
/// All numeric output in the toolkit goes through fmt_double so that reruns of a
/// pipeline are byte-for-byte reproducible: shortest round-trip decimal, no
/// locale involvement.

#pragma once

#include <string>
#include <vector>

namespace fiml {

/// Shortest decimal string that round-trips to the same double.
std::string fmt_double(double v);

/// Parse a double; throws ParseError naming `context` if the text is not a
/// complete finite-or-inf number.
double parse_double(const std::string& text, const std::string& context);

/// Header row plus string cells. Cells are unquoted; fields must not contain
/// commas or newlines (none of our schemas need them).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index for `name`; throws ParseError if absent.
    std::size_t col(const std::string& name) const;

    /// Numeric cell access; row is 0-based over data rows.
    double num(std::size_t row, std::size_t col_index) const;

    std::size_t n_rows() const { return rows.size(); }
};

/// Strict reader: every row must have exactly the header's field count.
/// Errors carry `path` and the 1-based line number.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const CsvTable& table);

/// Convenience for all-numeric tables: columns[i] must all share one length.
void write_csv_numeric(const std::string& path,
                       const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

} // namespace fiml
