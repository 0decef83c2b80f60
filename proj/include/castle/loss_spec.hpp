#pragma once

#include <optional>
#include <vector>

namespace castle {

enum class Task { Regression, BinaryClassification };

// Coefficients and toggles of the composite training objective:
//   prediction + lambda * (reconstruction + acyclicity + beta * input_l1)
// plus an optional weight-decay term used by the Lp benchmark regularizers.
// The toggles switch individual terms off for ablation runs.
struct LossSpec {
    Task task = Task::Regression;
    double lambda = 1.0;
    double beta = 0.0;
    // Feature columns (1..d) to reconstruct this iteration; absent = all columns.
    std::optional<std::vector<int>> subsample;
    bool use_reconstruction = true;
    bool use_acyclicity = true;
    bool use_input_l1 = true;
    int weight_decay_p = 0; // 0 = off, otherwise 1 or 2, applied at every dense layer
    double weight_decay = 0.0;
};

} // namespace castle
