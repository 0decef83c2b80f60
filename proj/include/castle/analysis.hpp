#pragma once

#include <string>
#include <vector>

#include "castle/linalg.hpp"
#include "castle/network.hpp"
#include "castle/synth.hpp"

namespace castle {

struct WeightedEdge {
    int from = 0;
    int to = 0;
    double weight = 0.0;
};

// Edges k -> j wherever msum(k, j) > threshold.
std::vector<WeightedEdge> extract_edges(const Matrix& msum, double threshold);

void save_weighted_edges(const std::string& path, const std::vector<WeightedEdge>& edges,
                         const std::vector<std::string>& names);

// Mean absolute adjacency weight into the target's sub-network per role,
// with the outgoing direction (target row of M) reported separately.
// Columns outside the truth graph must carry the dataset's noise flag;
// in-graph nodes with no edges at all also count as noise.
struct RoleStat {
    double mean_in = 0.0;
    double mean_out = 0.0;
    int count = 0;
};

struct RoleWeights {
    RoleStat parents, children, spouses, siblings, noise, other;
};

RoleWeights characterize_weights(const Matrix& msum, const Dag& truth,
                                 const std::vector<bool>& noise_flags);

void save_roles_csv(const std::string& path, const RoleWeights& roles);

struct BoundInputs {
    double s = 1.0;         // sub-Gaussian variance factor
    double gamma = 1.0;     // sharpness bound, > 0
    double delta = 0.05;    // confidence, in (0, 1)
    double B = 0.0;         // max sample l2 norm; 0 = measure from the data
    double kappa = 0.0;     // max spectral norm; 0 = measure from the checkpoint
    bool appendix_variant = false; // 2/N bracket instead of 1/N
};

struct BoundBreakdown {
    double value = 0.0;
    double reconstruction = 0.0; // L_N
    double acyclicity = 0.0;     // R
    double input_l1 = 0.0;       // V1
    double hidden_l2 = 0.0;      // V2
    double c1 = 0.0;
    double c2 = 0.0;
    double zeta = 0.0;
    double kappa = 0.0;
    double B = 0.0;
    double log_term = 0.0;
    double n = 0.0;
};

// 4*L_N + (1/N)[R + C1(V1 + V2) + log(8/delta)] + C2 with
// C1 = (zeta (d+1) kappa^{M-1} / gamma)^2, zeta = M B e sqrt(2 log(2 e h)),
// C2 = s^2 + 6 gamma. The appendix variant puts 2/N on the bracket.
BoundBreakdown evaluate_bound(const NetworkParams& params, const Matrix& xt,
                              const BoundInputs& inputs);

void save_bound_txt(const std::string& path, const BoundBreakdown& bd);

} // namespace castle
