#include "fluxonium/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fluxonium::csv {

int Table::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError("missing column: " + name);
    return static_cast<int>(it - header.begin());
}

bool Table::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        size_t b = field.find_first_not_of(" \t\r");
        size_t e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

Table parse(const std::string& text) {
    Table table;
    std::stringstream ss(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        auto fields = split_fields(line);
        if (table.header.empty()) {
            table.header = fields;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw CsvError("line " + std::to_string(lineno) + ": expected " +
                           std::to_string(table.header.size()) + " fields, got " +
                           std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            char* end = nullptr;
            double v = std::strtod(f.c_str(), &end);
            if (end == f.c_str() || *end != '\0') {
                throw CsvError("line " + std::to_string(lineno) + ": not a number: '" + f + "'");
            }
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw CsvError("empty file");
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void write_file(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot open " + path + " for writing");
    for (size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << ',';
        out << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
    if (!out) throw CsvError("write failed: " + path);
}

}  // namespace fluxonium::csv
