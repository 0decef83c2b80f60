#include "castle/loss.hpp"

#include <algorithm>
#include <cmath>

namespace castle {

namespace {

inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline Matrix sign_of(const Matrix& w) {
    return w.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

} // namespace

double prediction_loss(const Vector& pred, const Vector& y, Task task) {
    if (pred.size() != y.size())
        throw DimensionError("prediction_loss: length mismatch");
    if (pred.size() < 1)
        throw DimensionError("prediction_loss: empty vectors");
    const double n = static_cast<double>(pred.size());
    if (task == Task::Regression)
        return (pred - y).squaredNorm() / n;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0)
            throw DataError("prediction_loss: classification labels must be 0 or 1");
        loss += softplus(pred[i]) - y[i] * pred[i];
    }
    return loss / n;
}

double reconstruction_loss(const Matrix& pred, const Matrix& xt,
                           const std::optional<std::vector<int>>& subsample) {
    if (pred.rows() != xt.rows() || pred.cols() != xt.cols())
        throw DimensionError("reconstruction_loss: shape mismatch");
    const double n = static_cast<double>(xt.rows());
    if (!subsample) return (pred - xt).squaredNorm() / n;
    if (subsample->empty())
        throw ArgumentError("reconstruction_loss: empty subsample");
    double loss = 0.0;
    for (int c : *subsample) {
        if (c < 0 || c >= xt.cols())
            throw ArgumentError("reconstruction_loss: column index out of range");
        loss += (pred.col(c) - xt.col(c)).squaredNorm();
    }
    return loss / n;
}

Matrix adjacency_summary(const NetworkParams& params) {
    params.validate();
    if (params.arch != Arch::Castle)
        throw ArgumentError("adjacency_summary: requires the castle architecture");
    const int dp1 = params.shape.d + 1;
    Matrix m(dp1, dp1);
    for (int j = 0; j < dp1; ++j)
        for (int k = 0; k < dp1; ++k)
            m(k, j) = params.w.input[j].row(k).norm();
    return m;
}

double acyclicity_penalty(const Matrix& msum) {
    if (msum.rows() != msum.cols())
        throw DimensionError("acyclicity_penalty: matrix must be square");
    if (!msum.allFinite())
        throw NumericError("acyclicity_penalty: non-finite entries");
    Matrix e = mat_exp(msum.cwiseProduct(msum));
    double excess = e.trace() - static_cast<double>(msum.rows());
    return excess * excess;
}

double input_l1(const NetworkParams& params) {
    double total = 0.0;
    for (const auto& w : params.w.input) total += w.cwiseAbs().sum();
    return total;
}

double castle_objective(const NetworkParams& params, const Matrix& xt, const LossSpec& spec) {
    Matrix out = forward(params, xt);
    double loss = prediction_loss(out.col(0), xt.col(0), spec.task);
    if (spec.lambda == 0.0) return loss;

    double bracket = 0.0;
    if (spec.use_reconstruction) {
        std::optional<std::vector<int>> cols = spec.subsample;
        if (!cols && spec.task == Task::BinaryClassification) {
            // the prediction term already covers column 0 via cross-entropy
            std::vector<int> feature_cols(params.shape.d);
            for (int c = 1; c <= params.shape.d; ++c) feature_cols[c - 1] = c;
            cols = feature_cols;
        }
        bracket += reconstruction_loss(out, xt, cols);
    }
    if (spec.use_acyclicity)
        bracket += acyclicity_penalty(adjacency_summary(params));
    if (spec.use_input_l1)
        bracket += spec.beta * input_l1(params);
    loss += spec.lambda * bracket;

    if (spec.weight_decay_p != 0 && spec.weight_decay > 0.0) {
        double decay = 0.0;
        auto norm_p = [&](const Matrix& w) {
            return spec.weight_decay_p == 1 ? w.cwiseAbs().sum() : w.squaredNorm();
        };
        for (const auto& w : params.w.input) decay += norm_p(w);
        for (const auto& w : params.w.hidden) decay += norm_p(w);
        decay += norm_p(params.w.output);
        loss += spec.weight_decay * decay;
    }
    return loss;
}

std::vector<int> subsample_columns(int d, int count, Rng& rng) {
    if (count < 1 || count > d)
        throw ArgumentError("subsample_columns: count must be in [1, d]");
    std::vector<int> cols(d);
    for (int i = 0; i < d; ++i) cols[i] = i + 1;
    // partial Fisher-Yates: draw `count` distinct entries
    for (int i = 0; i < count; ++i) {
        int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d - i)));
        std::swap(cols[i], cols[j]);
    }
    cols.resize(count);
    std::sort(cols.begin(), cols.end());
    return cols;
}

double linear_castle_objective(const Matrix& xt, const Matrix& w, double lambda, double beta) {
    const double n = static_cast<double>(xt.rows());
    Vector resid_pred = xt.col(0) - xt * w.col(0);
    double pred = resid_pred.squaredNorm() / n;
    Matrix resid = xt - xt * w;
    double recon = resid.squaredNorm() / n;
    double acyc = acyclicity_penalty(w);
    double l1 = w.cwiseAbs().sum();
    return pred + lambda * (recon + acyc + beta * l1);
}

Matrix linear_castle_fit(const Matrix& xt, double lambda, double beta,
                         const LinearFitOptions& opts) {
    if (xt.rows() < 2 || xt.cols() < 2)
        throw DimensionError("linear_castle_fit: need at least 2 samples and 2 variables");
    const Eigen::Index dp1 = xt.cols();
    const double n = static_cast<double>(xt.rows());
    const Matrix c = (xt.transpose() * xt) / n; // sufficient statistics

    Matrix w = Matrix::Zero(dp1, dp1);
    Matrix m = Matrix::Zero(dp1, dp1);
    Matrix v = Matrix::Zero(dp1, dp1);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const Matrix identity = Matrix::Identity(dp1, dp1);

    for (int t = 1; t <= opts.iterations; ++t) {
        Matrix grad = Matrix::Zero(dp1, dp1);
        // prediction term, column 0 only
        grad.col(0) += 2.0 * (c * w.col(0) - c.col(0));
        // reconstruction term
        grad += lambda * (-2.0) * (c * (identity - w));
        // acyclicity term
        Matrix e = mat_exp(w.cwiseProduct(w));
        double excess = e.trace() - static_cast<double>(dp1);
        grad += lambda * 4.0 * excess * e.transpose().cwiseProduct(w);
        // l1 term
        grad += lambda * beta * sign_of(w);
        grad.diagonal().setZero();

        m = b1 * m + (1.0 - b1) * grad;
        v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
        double bc1 = 1.0 - std::pow(b1, t);
        double bc2 = 1.0 - std::pow(b2, t);
        Matrix update = (m / bc1).cwiseQuotient(
            (v / bc2).cwiseSqrt() + Matrix::Constant(dp1, dp1, eps));
        w -= opts.learning_rate * update;
        w.diagonal().setZero();

        if (!w.allFinite())
            throw NumericError("linear_castle_fit: diverged at iteration " + std::to_string(t));
    }
    return w;
}

} // namespace castle
