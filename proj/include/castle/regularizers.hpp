#pragma once

#include <string>
#include <utility>
#include <vector>

#include "castle/linalg.hpp"
#include "castle/network.hpp"
#include "castle/rng.hpp"

namespace castle {

enum class RegKind { Baseline, L1, L2, Dropout, InputNoise, MixUp, Sae, Castle };

// One benchmark column: a regularizer kind plus its candidate strengths
// (searched on the validation split when more than one is given).
struct RegularizerSpec {
    std::string label = "baseline";
    RegKind kind = RegKind::Baseline;
    std::vector<double> grid; // empty means the single strength 0
};

// Parse a benchmark name: baseline, l1, l2, do02, do05, in, mu, sae, castle.
// An optional ":v1|v2" suffix overrides the default strength grid.
RegularizerSpec parse_regularizer(const std::string& name);

// strength * sum over all dense layers of ||W||_p^p (L2 uses the squared
// Frobenius norm).
double weight_decay_penalty(const NetworkParams& params, int pnorm, double strength);

// Inverted dropout: kept units scaled by 1/(1-rate); identity outside training.
Matrix dropout_apply(const Matrix& activations, double rate, Rng& rng, bool training);

// x + N(0, sigma^2) elementwise; sigma == 0 is the identity and consumes no state.
Matrix input_noise_apply(const Matrix& x, double sigma, Rng& rng);

// One Beta(alpha, alpha) draw.
double beta_draw(Rng& rng, double alpha);

// Convex combination of the batch with a random permutation of itself,
// coefficient drawn from Beta(alpha, alpha) once per batch; the labels mix
// with the same coefficient.
std::pair<Matrix, Vector> mixup_batch(const Matrix& x, const Vector& y, double alpha, Rng& rng);

// Full self-inclusive reconstruction loss (1/N)||X~ - f(X~)||_F^2.
double sae_loss(const NetworkParams& params, const Matrix& xt);

} // namespace castle
