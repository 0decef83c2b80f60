#include "castle/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "castle/loss.hpp"

namespace castle {

std::vector<WeightedEdge> extract_edges(const Matrix& msum, double threshold) {
    if (threshold < 0.0) throw ArgumentError("extract_edges: threshold must be >= 0");
    std::vector<WeightedEdge> edges;
    for (Eigen::Index k = 0; k < msum.rows(); ++k)
        for (Eigen::Index j = 0; j < msum.cols(); ++j)
            if (k != j && msum(k, j) > threshold)
                edges.push_back({static_cast<int>(k), static_cast<int>(j), msum(k, j)});
    return edges;
}

void save_weighted_edges(const std::string& path, const std::vector<WeightedEdge>& edges,
                         const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open edge file for writing: " + path);
    auto name = [&](int i) {
        return i < static_cast<int>(names.size()) ? names[i] : "x" + std::to_string(i);
    };
    for (const auto& e : edges)
        out << name(e.from) << " -> " << name(e.to) << " " << e.weight << "\n";
}

RoleWeights characterize_weights(const Matrix& msum, const Dag& truth,
                                 const std::vector<bool>& noise_flags) {
    if (msum.rows() != msum.cols())
        throw DimensionError("characterize_weights: matrix must be square");
    const int cols = static_cast<int>(msum.rows());
    if (static_cast<int>(noise_flags.size()) != cols)
        throw DataError("characterize_weights: noise flag count mismatch");
    if (truth.num_nodes > cols)
        throw DataError("characterize_weights: truth graph larger than the matrix");
    if (truth.target != 0)
        throw ArgumentError("characterize_weights: truth graph must be column-relabeled (target 0)");

    const int target = 0;
    std::set<int> parents(truth.parents(target).begin(), truth.parents(target).end());
    std::set<int> children(truth.children(target).begin(), truth.children(target).end());
    auto sp = truth.spouses(target);
    auto si = truth.siblings(target);
    std::set<int> spouses(sp.begin(), sp.end());
    std::set<int> siblings(si.begin(), si.end());

    RoleWeights roles;
    auto accumulate = [&](RoleStat& st, int col) {
        st.mean_in += std::abs(msum(col, target));
        st.mean_out += std::abs(msum(target, col));
        st.count++;
    };
    for (int c = 1; c < cols; ++c) {
        if (c >= truth.num_nodes) {
            if (!noise_flags[c])
                throw DataError("characterize_weights: column " + std::to_string(c) +
                                " is outside the truth graph and not flagged as noise");
            accumulate(roles.noise, c);
        } else if (parents.count(c)) {
            accumulate(roles.parents, c);
        } else if (children.count(c)) {
            accumulate(roles.children, c);
        } else if (spouses.count(c)) {
            accumulate(roles.spouses, c);
        } else if (siblings.count(c)) {
            accumulate(roles.siblings, c);
        } else if (noise_flags[c] || truth.degree(c) == 0) {
            accumulate(roles.noise, c);
        } else {
            accumulate(roles.other, c);
        }
    }
    for (RoleStat* st : {&roles.parents, &roles.children, &roles.spouses, &roles.siblings,
                         &roles.noise, &roles.other}) {
        if (st->count > 0) {
            st->mean_in /= st->count;
            st->mean_out /= st->count;
        }
    }
    return roles;
}

void save_roles_csv(const std::string& path, const RoleWeights& roles) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open roles file for writing: " + path);
    out << "role,count,mean_in,mean_out\n";
    auto line = [&](const char* nm, const RoleStat& st) {
        out << nm << "," << st.count << "," << st.mean_in << "," << st.mean_out << "\n";
    };
    line("parents", roles.parents);
    line("children", roles.children);
    line("spouses", roles.spouses);
    line("siblings", roles.siblings);
    line("noise", roles.noise);
    line("other", roles.other);
}

BoundBreakdown evaluate_bound(const NetworkParams& params, const Matrix& xt,
                              const BoundInputs& inputs) {
    params.validate();
    if (inputs.delta <= 0.0 || inputs.delta >= 1.0)
        throw ArgumentError("evaluate_bound: delta must be in (0, 1)");
    if (inputs.gamma <= 0.0)
        throw ArgumentError("evaluate_bound: gamma must be positive");
    if (params.arch != Arch::Castle)
        throw ArgumentError("evaluate_bound: requires a castle checkpoint");
    if (xt.rows() < 1) throw DimensionError("evaluate_bound: empty data");

    BoundBreakdown bd;
    bd.n = static_cast<double>(xt.rows());

    Matrix out = forward(params, xt);
    bd.reconstruction = (out - xt).squaredNorm() / bd.n;
    bd.acyclicity = acyclicity_penalty(adjacency_summary(params));
    bd.input_l1 = input_l1(params);

    double sq = 0.0;
    for (const auto& w : params.w.hidden) sq += w.squaredNorm();
    sq += params.w.output.squaredNorm();
    bd.hidden_l2 = std::sqrt(sq);

    bd.B = inputs.B;
    if (bd.B <= 0.0) bd.B = xt.rowwise().norm().maxCoeff();
    bd.kappa = inputs.kappa;
    if (bd.kappa <= 0.0) {
        double k = 0.0;
        for (const auto& w : params.w.input) k = std::max(k, spectral_norm(w, 1e-8));
        for (const auto& w : params.w.hidden) k = std::max(k, spectral_norm(w, 1e-8));
        k = std::max(k, spectral_norm(params.w.output, 1e-8));
        bd.kappa = k;
    }

    const double m_layers = static_cast<double>(params.shape.depth);
    const double h = static_cast<double>(params.shape.width());
    const double dp1 = static_cast<double>(params.shape.d + 1);
    const double e = std::exp(1.0);

    bd.zeta = m_layers * bd.B * e * std::sqrt(2.0 * std::log(2.0 * e * h));
    double c1_root = bd.zeta * dp1 * std::pow(bd.kappa, m_layers - 1.0) / inputs.gamma;
    bd.c1 = c1_root * c1_root;
    bd.c2 = inputs.s * inputs.s + 6.0 * inputs.gamma;
    bd.log_term = std::log(8.0 / inputs.delta);

    const double coef = inputs.appendix_variant ? 2.0 : 1.0;
    bd.value = 4.0 * bd.reconstruction +
               (coef / bd.n) * (bd.acyclicity + bd.c1 * (bd.input_l1 + bd.hidden_l2) + bd.log_term) +
               bd.c2;
    return bd;
}

void save_bound_txt(const std::string& path, const BoundBreakdown& bd) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open bound file for writing: " + path);
    out << "bound " << bd.value << "\n"
        << "reconstruction_loss " << bd.reconstruction << "\n"
        << "acyclicity " << bd.acyclicity << "\n"
        << "input_l1 " << bd.input_l1 << "\n"
        << "hidden_output_l2 " << bd.hidden_l2 << "\n"
        << "C1 " << bd.c1 << "\n"
        << "C2 " << bd.c2 << "\n"
        << "zeta " << bd.zeta << "\n"
        << "kappa " << bd.kappa << "\n"
        << "B " << bd.B << "\n"
        << "log(8/delta) " << bd.log_term << "\n"
        << "N " << bd.n << "\n";
}

} // namespace castle
