#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "castle/linalg.hpp"
#include "castle/loss_spec.hpp"
#include "castle/rng.hpp"

namespace castle {

// Which slice of the shared architecture a model instantiates.
//   Castle: d+1 sub-networks with per-variable input matrices; sub-network k
//           never sees variable k (row k of its input matrix is held at zero).
//   Single: one prediction head; the target row of the input matrix is zeroed
//           so the model predicts Y from the features only.
//   Sae:    one shared input matrix (target row zeroed) feeding d+1 output
//           heads, so every feature is reconstructed using all features
//           including itself.
enum class Arch { Castle, Single, Sae };

struct NetworkShape {
    int d = 1;      // feature count; samples are rows of the N x (d+1) matrix [Y, X]
    int depth = 3;  // M, number of weight layers; depth == 2 is the linear model
    int hidden = 0; // h, per-layer width; 0 resolves to d+1

    int width() const { return hidden > 0 ? hidden : d + 1; }
    void validate() const;
};

// Weight tensors (also reused for gradients and Adam moments).
struct ParamBlocks {
    std::vector<Matrix> input;  // per input block, (d+1) x h
    std::vector<Matrix> hidden; // depth-2 shared matrices, h x h
    Matrix output;              // h x heads, column k is the head-k output weights

    void set_zero_like(const ParamBlocks& like);
    bool all_finite(std::string* offending_block = nullptr) const;
};

struct NetworkParams {
    NetworkShape shape;
    Arch arch = Arch::Castle;
    ParamBlocks w;

    int heads() const { return arch == Arch::Single ? 1 : shape.d + 1; }
    int blocks() const { return arch == Arch::Castle ? shape.d + 1 : 1; }
    // Input row held at zero for the given block (the variable it must not see).
    int mask_row(int block) const { return arch == Arch::Castle ? block : 0; }
    // Input block feeding the given head.
    int block_of_head(int head) const { return arch == Arch::Castle ? head : 0; }

    void apply_masks();
    void validate() const;
};

struct AdamState {
    ParamBlocks m;
    ParamBlocks v;
    long t = 0;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam_state(const NetworkParams& params, double learning_rate);

// Fan-scaled uniform initialization U(-b, b) with b = sqrt(6 / (fan_in + fan_out));
// each weight block draws from its own child stream of rng so that models of
// different arch share bit-identical weights where their blocks coincide.
NetworkParams init_params(const NetworkShape& shape, const Rng& rng, Arch arch = Arch::Castle);

// Evaluation-mode forward pass: N x heads matrix, column k = f_k(X~).
Matrix forward(const NetworkParams& params, const Matrix& xt);

// Single output column f_head(X~) without computing the other heads.
Vector forward_head(const NetworkParams& params, const Matrix& xt, int head);

struct BackwardResult {
    double loss = 0.0;
    ParamBlocks grads;
};

// Loss value and exact analytic gradient of the composite objective described
// by spec. Gradients at masked positions are zero.
BackwardResult backward(const NetworkParams& params, const Matrix& xt, const LossSpec& spec);

// Training-time variant: inverted dropout with the given rate after every
// hidden activation. rate == 0 reduces exactly to backward().
BackwardResult backward_dropout(const NetworkParams& params, const Matrix& xt,
                                const LossSpec& spec, double dropout_rate, Rng& rng);

// Standard Adam update with bias correction; masks are re-applied afterwards.
void adam_step(AdamState& state, NetworkParams& params, const ParamBlocks& grads);

// Checkpoint container: 8-byte magic "CASTLEB1", then version, arch, task,
// shape, seed and all weight matrices in row-major order (layout documented
// in the README).
void save_checkpoint(const std::string& path, const NetworkParams& params,
                     std::uint64_t seed, Task task);
struct Checkpoint {
    NetworkParams params;
    std::uint64_t seed = 0;
    Task task = Task::Regression;
};
Checkpoint load_checkpoint(const std::string& path);

} // namespace castle
