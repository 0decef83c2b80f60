#pragma once

#include <string>
#include <vector>

#include "castle/linalg.hpp"
#include "castle/loss_spec.hpp"

namespace castle {

// Sample matrix with the target in column 0, plus column metadata.
struct Dataset {
    Matrix xt;                      // N x (d+1), column 0 = Y
    std::vector<std::string> names; // size d+1, names[0] is the target
    Task task = Task::Regression;
    std::vector<bool> noise_flags;  // size d+1; disconnected noise columns
    std::string provenance;

    int d() const { return static_cast<int>(xt.cols()) - 1; }
    int n() const { return static_cast<int>(xt.rows()); }
    void validate() const;
};

// Comma-separated export with a header row; full precision so that a
// round trip reproduces the matrix bit for bit.
void save_csv(const std::string& path, const Dataset& ds);

struct LoadReport {
    int dropped_rows = 0;
};

// CSV ingestion: numeric parse of all columns, rows with missing cells
// dropped (count reported), target column moved to column 0. Columns whose
// name starts with "noise" are flagged as noise variables.
Dataset load_csv(const std::string& path, const std::string& target_column,
                 Task task = Task::Regression, LoadReport* report = nullptr);

} // namespace castle
