#pragma once

#include <optional>
#include <vector>

#include "castle/linalg.hpp"
#include "castle/loss_spec.hpp"
#include "castle/network.hpp"
#include "castle/rng.hpp"

namespace castle {

// Prediction loss for the target column: mean squared error for regression,
// mean binary cross-entropy on sigmoid(logits) for binary classification.
double prediction_loss(const Vector& pred, const Vector& y, Task task);

// (1/N) Frobenius reconstruction loss restricted to the given columns
// (all columns when absent).
double reconstruction_loss(const Matrix& pred, const Matrix& xt,
                           const std::optional<std::vector<int>>& subsample = std::nullopt);

// The (d+1)x(d+1) matrix whose (k, j) entry is the l2 norm of row k of input
// block j; the diagonal is zero by the mask invariant. This is the learned
// weighted adjacency read off the input layers.
Matrix adjacency_summary(const NetworkParams& params);

// (trace(e^{M.*M}) - (d+1))^2; zero exactly when the nonzero pattern of msum
// is acyclic.
double acyclicity_penalty(const Matrix& msum);

// Sum of absolute values over the input weight matrices.
double input_l1(const NetworkParams& params);

// prediction + lambda * (reconstruction + acyclicity + beta * input_l1),
// the scalar that backward() differentiates.
double castle_objective(const NetworkParams& params, const Matrix& xt, const LossSpec& spec);

// `count` distinct feature indices drawn uniformly from {1..d}, sorted.
std::vector<int> subsample_columns(int d, int count, Rng& rng);

struct LinearFitOptions {
    double learning_rate = 0.01;
    int iterations = 3000;
};

// Adam fit of the (d+1)x(d+1) weight matrix of the linear model: squared
// prediction loss on column 0 plus lambda * (reconstruction + acyclicity +
// beta * l1). The diagonal is constrained to zero throughout.
Matrix linear_castle_fit(const Matrix& xt, double lambda, double beta,
                         const LinearFitOptions& opts = {});

// Objective of the linear model evaluated at W (used by the fit and tests).
double linear_castle_objective(const Matrix& xt, const Matrix& w, double lambda, double beta);

} // namespace castle
