#include "castle/regularizers.hpp"

#include <cmath>
#include <sstream>

#include "castle/loss.hpp"

namespace castle {

RegularizerSpec parse_regularizer(const std::string& name) {
    std::string base = name;
    std::vector<double> grid;
    auto colon = name.find(':');
    if (colon != std::string::npos) {
        base = name.substr(0, colon);
        std::istringstream ss(name.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, '|')) grid.push_back(std::stod(tok));
    }

    RegularizerSpec spec;
    spec.label = base;
    if (base == "baseline") {
        spec.kind = RegKind::Baseline;
    } else if (base == "l1") {
        spec.kind = RegKind::L1;
        spec.grid = {0.1, 0.01, 0.001};
    } else if (base == "l2") {
        spec.kind = RegKind::L2;
        spec.grid = {0.1, 0.01, 0.001};
    } else if (base == "do02") {
        spec.kind = RegKind::Dropout;
        spec.grid = {0.2};
    } else if (base == "do05") {
        spec.kind = RegKind::Dropout;
        spec.grid = {0.5};
    } else if (base == "in") {
        spec.kind = RegKind::InputNoise;
        spec.grid = {0.1, 0.01};
    } else if (base == "mu") {
        spec.kind = RegKind::MixUp;
        spec.grid = {1.0};
    } else if (base == "sae") {
        spec.kind = RegKind::Sae;
    } else if (base == "castle") {
        spec.kind = RegKind::Castle;
    } else {
        throw ArgumentError("unknown regularizer: " + name);
    }
    if (!grid.empty()) spec.grid = grid;
    return spec;
}

double weight_decay_penalty(const NetworkParams& params, int pnorm, double strength) {
    if (pnorm != 1 && pnorm != 2) throw ArgumentError("weight_decay_penalty: p must be 1 or 2");
    double total = 0.0;
    auto add = [&](const Matrix& w) {
        total += pnorm == 1 ? w.cwiseAbs().sum() : w.squaredNorm();
    };
    for (const auto& w : params.w.input) add(w);
    for (const auto& w : params.w.hidden) add(w);
    add(params.w.output);
    return strength * total;
}

Matrix dropout_apply(const Matrix& activations, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw ArgumentError("dropout rate must be in [0, 1)");
    if (!training || rate == 0.0) return activations;
    Matrix out = activations;
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            out(i, j) = rng.next_uniform() < rate ? 0.0 : out(i, j) * scale;
    return out;
}

Matrix input_noise_apply(const Matrix& x, double sigma, Rng& rng) {
    if (sigma < 0.0) throw ArgumentError("input noise sigma must be >= 0");
    if (sigma == 0.0) return x;
    Matrix out = x;
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            out(i, j) += rng.next_gaussian(0.0, sigma);
    return out;
}

namespace {

// Marsaglia-Tsang gamma sampler; alpha < 1 handled by the boost identity.
double gamma_draw(Rng& rng, double alpha) {
    if (alpha < 1.0) {
        double u = rng.next_uniform();
        while (u <= 0.0) u = rng.next_uniform();
        return gamma_draw(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.next_gaussian();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = rng.next_uniform();
        while (u <= 0.0) u = rng.next_uniform();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

} // namespace

double beta_draw(Rng& rng, double alpha) {
    if (alpha <= 0.0) throw ArgumentError("beta_draw: alpha must be positive");
    double a = gamma_draw(rng, alpha);
    double b = gamma_draw(rng, alpha);
    if (a + b == 0.0) return 0.5;
    return a / (a + b);
}

std::pair<Matrix, Vector> mixup_batch(const Matrix& x, const Vector& y, double alpha, Rng& rng) {
    if (alpha <= 0.0) throw ArgumentError("mixup: alpha must be positive");
    if (x.rows() < 2) throw ArgumentError("mixup: batch must have at least 2 rows");
    if (x.rows() != y.size()) throw DimensionError("mixup: batch size mismatch");

    const double lam = beta_draw(rng, alpha);
    std::vector<int> perm(x.rows());
    for (int i = 0; i < x.rows(); ++i) perm[i] = i;
    rng.shuffle(perm);

    Matrix xm(x.rows(), x.cols());
    Vector ym(y.size());
    for (int i = 0; i < x.rows(); ++i) {
        xm.row(i) = lam * x.row(i) + (1.0 - lam) * x.row(perm[i]);
        ym[i] = lam * y[i] + (1.0 - lam) * y[perm[i]];
    }
    return {std::move(xm), std::move(ym)};
}

double sae_loss(const NetworkParams& params, const Matrix& xt) {
    return reconstruction_loss(forward(params, xt), xt);
}

} // namespace castle
