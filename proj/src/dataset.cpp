#include "castle/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace castle {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
    if (cell.empty()) return true;
    std::string low;
    for (char c : cell) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return low == "na" || low == "nan" || low == "null" || low == "?";
}

} // namespace

void Dataset::validate() const {
    if (xt.cols() < 2) throw DataError("Dataset: needs a target and at least one feature");
    if (xt.rows() < 1) throw DataError("Dataset: empty sample matrix");
    if (static_cast<Eigen::Index>(names.size()) != xt.cols())
        throw DataError("Dataset: column name count mismatch");
    if (static_cast<Eigen::Index>(noise_flags.size()) != xt.cols())
        throw DataError("Dataset: noise flag count mismatch");
    if (!xt.allFinite()) throw DataError("Dataset: non-finite values");
    if (task == Task::BinaryClassification)
        for (int i = 0; i < xt.rows(); ++i)
            if (xt(i, 0) != 0.0 && xt(i, 0) != 1.0)
                throw DataError("Dataset: binary target must be 0 or 1");
}

void save_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open CSV for writing: " + path);
    for (std::size_t j = 0; j < ds.names.size(); ++j)
        out << (j ? "," : "") << ds.names[j];
    out << "\n";
    char buf[40];
    for (int i = 0; i < ds.xt.rows(); ++i) {
        for (int j = 0; j < ds.xt.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.xt(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw DataError("CSV write failed: " + path);
}

Dataset load_csv(const std::string& path, const std::string& target_column,
                 Task task, LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("CSV has no header: " + path);
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    if (header.empty()) throw DataError("CSV header is empty: " + path);

    int target_idx = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == target_column) target_idx = static_cast<int>(j);
    if (target_idx < 0)
        throw ArgumentError("target column '" + target_column + "' not present in " + path);

    const int cols = static_cast<int>(header.size());
    std::vector<std::vector<double>> rows;
    int dropped = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != cols)
            throw DataError("CSV row " + std::to_string(lineno) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(cols));
        std::vector<double> row(cols);
        bool missing = false;
        for (int j = 0; j < cols && !missing; ++j) {
            std::string cell = trim(cells[j]);
            if (is_missing(cell)) {
                missing = true;
                break;
            }
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            auto [ptr, ec] = std::from_chars(first, last, row[j]);
            if (ec != std::errc() || ptr != last)
                throw DataError("CSV cell at row " + std::to_string(lineno) + ", column '" +
                                header[j] + "' is not numeric: '" + cell + "'");
            if (!std::isfinite(row[j])) missing = true;
        }
        if (missing) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (report) report->dropped_rows = dropped;
    if (rows.empty()) throw DataError("CSV has no complete rows: " + path);

    Dataset ds;
    ds.task = task;
    ds.provenance = path;
    ds.xt.resize(static_cast<Eigen::Index>(rows.size()), cols);
    ds.names.resize(cols);
    ds.noise_flags.resize(cols);

    // target first, remaining columns keep their file order
    std::vector<int> src(cols);
    src[0] = target_idx;
    int k = 1;
    for (int j = 0; j < cols; ++j)
        if (j != target_idx) src[k++] = j;
    for (int j = 0; j < cols; ++j) {
        ds.names[j] = header[src[j]];
        ds.noise_flags[j] = j > 0 && ds.names[j].rfind("noise", 0) == 0;
        for (std::size_t i = 0; i < rows.size(); ++i)
            ds.xt(static_cast<Eigen::Index>(i), j) = rows[i][src[j]];
    }
    ds.validate();
    return ds;
}

} // namespace castle
