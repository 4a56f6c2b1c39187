#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fluxonium::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parses a comma-separated file with one header row and numeric data rows.
// Blank lines and lines starting with '#' are skipped.
Table read_file(const std::string& path);
Table parse(const std::string& text);

// Shortest decimal string that round-trips the double (printf %.17g pruned).
std::string format_double(double v);

void write_file(const std::string& path, const Table& table);

}  // namespace fluxonium::csv
