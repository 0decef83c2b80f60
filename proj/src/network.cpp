#include "castle/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace castle {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'S', 'T', 'L', 'E', 'B', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double init_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

} // namespace

void NetworkShape::validate() const {
    if (d < 1) throw ArgumentError("NetworkShape: d must be >= 1");
    if (depth < 2) throw ArgumentError("NetworkShape: depth must be >= 2");
    if (width() < 1) throw ArgumentError("NetworkShape: hidden width must be >= 1");
}

void ParamBlocks::set_zero_like(const ParamBlocks& like) {
    input.resize(like.input.size());
    for (std::size_t b = 0; b < like.input.size(); ++b)
        input[b] = Matrix::Zero(like.input[b].rows(), like.input[b].cols());
    hidden.resize(like.hidden.size());
    for (std::size_t m = 0; m < like.hidden.size(); ++m)
        hidden[m] = Matrix::Zero(like.hidden[m].rows(), like.hidden[m].cols());
    output = Matrix::Zero(like.output.rows(), like.output.cols());
}

bool ParamBlocks::all_finite(std::string* offending_block) const {
    for (std::size_t b = 0; b < input.size(); ++b) {
        if (!input[b].allFinite()) {
            if (offending_block) *offending_block = "input[" + std::to_string(b) + "]";
            return false;
        }
    }
    for (std::size_t m = 0; m < hidden.size(); ++m) {
        if (!hidden[m].allFinite()) {
            if (offending_block) *offending_block = "hidden[" + std::to_string(m) + "]";
            return false;
        }
    }
    if (!output.allFinite()) {
        if (offending_block) *offending_block = "output";
        return false;
    }
    return true;
}

void NetworkParams::apply_masks() {
    for (int b = 0; b < blocks(); ++b)
        w.input[b].row(mask_row(b)).setZero();
}

void NetworkParams::validate() const {
    shape.validate();
    const int h = shape.width();
    if (static_cast<int>(w.input.size()) != blocks())
        throw DimensionError("NetworkParams: wrong number of input blocks");
    for (const auto& m : w.input)
        if (m.rows() != shape.d + 1 || m.cols() != h)
            throw DimensionError("NetworkParams: input block shape mismatch");
    if (static_cast<int>(w.hidden.size()) != shape.depth - 2)
        throw DimensionError("NetworkParams: wrong number of hidden matrices");
    for (const auto& m : w.hidden)
        if (m.rows() != h || m.cols() != h)
            throw DimensionError("NetworkParams: hidden matrix shape mismatch");
    if (w.output.rows() != h || w.output.cols() != heads())
        throw DimensionError("NetworkParams: output matrix shape mismatch");
}

AdamState make_adam_state(const NetworkParams& params, double learning_rate) {
    AdamState st;
    st.m.set_zero_like(params.w);
    st.v.set_zero_like(params.w);
    st.learning_rate = learning_rate;
    return st;
}

NetworkParams init_params(const NetworkShape& shape, const Rng& rng, Arch arch) {
    shape.validate();
    NetworkParams p;
    p.shape = shape;
    p.arch = arch;
    const int h = shape.width();
    const int dp1 = shape.d + 1;

    p.w.input.resize(p.blocks());
    for (int b = 0; b < p.blocks(); ++b) {
        Rng r = rng.fork(1000 + static_cast<std::uint64_t>(b));
        p.w.input[b] = uniform_matrix(r, dp1, h, init_bound(dp1, h));
    }
    p.w.hidden.resize(shape.depth - 2);
    for (int m = 0; m < shape.depth - 2; ++m) {
        Rng r = rng.fork(2000 + static_cast<std::uint64_t>(m));
        p.w.hidden[m] = uniform_matrix(r, h, h, init_bound(h, h));
    }
    p.w.output.resize(h, p.heads());
    for (int k = 0; k < p.heads(); ++k) {
        Rng r = rng.fork(3000 + static_cast<std::uint64_t>(k));
        p.w.output.col(k) = uniform_matrix(r, h, 1, init_bound(h, 1));
    }
    p.apply_masks();
    return p;
}

namespace {

// Per-head activation trace kept for the backward pass.
struct HeadTrace {
    std::vector<Matrix> pre;  // pre-activation of layers 1..M-1
    std::vector<Matrix> post; // post-activation (and post-dropout) of layers 1..M-1
    std::vector<Matrix> drop; // inverted-dropout masks, entries 0 or 1/(1-rate); empty when off
};

void run_chain(const NetworkParams& p, const Matrix& xt, int block, HeadTrace& tr,
               double dropout_rate, Rng* rng) {
    const int M = p.shape.depth;
    tr.pre.clear();
    tr.post.clear();
    tr.drop.clear();

    auto activate = [&](const Matrix& pre) {
        Matrix h = pre.unaryExpr([](double v) { return relu(v); });
        if (dropout_rate > 0.0) {
            Matrix mask(pre.rows(), pre.cols());
            const double keep_scale = 1.0 / (1.0 - dropout_rate);
            for (Eigen::Index i = 0; i < mask.rows(); ++i)
                for (Eigen::Index j = 0; j < mask.cols(); ++j)
                    mask(i, j) = rng->next_uniform() < dropout_rate ? 0.0 : keep_scale;
            h = h.cwiseProduct(mask);
            tr.drop.push_back(std::move(mask));
        }
        return h;
    };

    Matrix a1 = xt * p.w.input[block];
    if (M == 2) { // degenerate linear model, no activation
        tr.pre.push_back(a1);
        tr.post.push_back(std::move(a1));
        return;
    }
    tr.pre.push_back(std::move(a1));
    tr.post.push_back(activate(tr.pre.back()));
    for (int m = 0; m < M - 2; ++m) {
        tr.pre.push_back(tr.post.back() * p.w.hidden[m]);
        tr.post.push_back(activate(tr.pre.back()));
    }
}

std::vector<int> reconstruction_columns(const NetworkParams& p, const LossSpec& spec) {
    if (!spec.use_reconstruction || spec.lambda == 0.0) return {};
    if (p.heads() != p.shape.d + 1)
        throw DimensionError("reconstruction requires a network with d+1 output heads");
    std::vector<int> cols;
    if (spec.subsample) {
        cols = *spec.subsample;
        for (int c : cols)
            if (c < 1 || c > p.shape.d)
                throw ArgumentError("subsample column out of range");
        std::sort(cols.begin(), cols.end());
    } else {
        for (int c = 0; c <= p.shape.d; ++c) {
            if (c == 0 && spec.task == Task::BinaryClassification) continue;
            cols.push_back(c);
        }
    }
    return cols;
}

BackwardResult backward_impl(const NetworkParams& p, const Matrix& xt, const LossSpec& spec,
                             double dropout_rate, Rng* rng) {
    p.validate();
    if (xt.cols() != p.shape.d + 1)
        throw DimensionError("backward: sample matrix must have d+1 columns");
    if (xt.rows() < 1) throw DimensionError("backward: empty batch");

    const int M = p.shape.depth;
    const double n = static_cast<double>(xt.rows());
    const int dp1 = p.shape.d + 1;

    BackwardResult res;
    res.grads.set_zero_like(p.w);

    const std::vector<int> recon = reconstruction_columns(p, spec);
    std::vector<int> heads;
    heads.push_back(0);
    for (int c : recon)
        if (c != 0) heads.push_back(c);

    double loss = 0.0;
    for (int k : heads) {
        HeadTrace tr;
        run_chain(p, xt, p.block_of_head(k), tr, M >= 3 ? dropout_rate : 0.0, rng);
        Vector out = tr.post.back() * p.w.output.col(k);

        // dLoss/dout for this head
        Vector g = Vector::Zero(xt.rows());
        if (k == 0) {
            if (spec.task == Task::Regression) {
                Vector r = out - xt.col(0);
                loss += r.squaredNorm() / n;
                g += (2.0 / n) * r;
            } else {
                for (Eigen::Index i = 0; i < out.size(); ++i) {
                    double y = xt(i, 0);
                    loss += (softplus(out[i]) - y * out[i]) / n;
                    g[i] += (sigmoid(out[i]) - y) / n;
                }
            }
        }
        if (!recon.empty() && std::binary_search(recon.begin(), recon.end(), k)) {
            Vector r = out - xt.col(k);
            loss += spec.lambda * r.squaredNorm() / n;
            g += spec.lambda * (2.0 / n) * r;
        }

        // backpropagate g through the chain
        res.grads.output.col(k) += tr.post.back().transpose() * g;
        Matrix delta = g * p.w.output.col(k).transpose(); // N x h
        if (M >= 3) {
            for (int m = M - 2; m >= 1; --m) {
                // layer m+1: pre-activation tr.pre[m], weight p.w.hidden[m-1]
                if (!tr.drop.empty()) delta = delta.cwiseProduct(tr.drop[m]);
                delta = delta.cwiseProduct(
                    tr.pre[m].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
                res.grads.hidden[m - 1] += tr.post[m - 1].transpose() * delta;
                delta = delta * p.w.hidden[m - 1].transpose();
            }
            if (!tr.drop.empty()) delta = delta.cwiseProduct(tr.drop[0]);
            delta = delta.cwiseProduct(
                tr.pre[0].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        }
        res.grads.input[p.block_of_head(k)] += xt.transpose() * delta;
    }

    // acyclicity term on the input blocks (castle architecture only)
    if (spec.lambda > 0.0 && spec.use_acyclicity) {
        if (p.arch != Arch::Castle)
            throw ArgumentError("acyclicity term requires the castle architecture");
        Matrix s(dp1, dp1);
        for (int j = 0; j < dp1; ++j)
            for (int k = 0; k < dp1; ++k)
                s(k, j) = p.w.input[j].row(k).squaredNorm();
        Matrix e = mat_exp(s);
        double excess = e.trace() - static_cast<double>(dp1);
        loss += spec.lambda * excess * excess;
        const double c = spec.lambda * 4.0 * excess;
        for (int j = 0; j < dp1; ++j)
            for (int k = 0; k < dp1; ++k)
                res.grads.input[j].row(k) += c * e(j, k) * p.w.input[j].row(k);
    }

    // input-layer L1
    if (spec.lambda > 0.0 && spec.beta > 0.0 && spec.use_input_l1) {
        double l1 = 0.0;
        for (int b = 0; b < p.blocks(); ++b) {
            l1 += p.w.input[b].cwiseAbs().sum();
            res.grads.input[b] += spec.lambda * spec.beta *
                p.w.input[b].unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
        }
        loss += spec.lambda * spec.beta * l1;
    }

    // Lp weight decay at every dense layer (benchmark regularizers)
    if (spec.weight_decay_p != 0 && spec.weight_decay > 0.0) {
        auto add_decay = [&](const Matrix& wm, Matrix& gm) {
            if (spec.weight_decay_p == 1) {
                loss += spec.weight_decay * wm.cwiseAbs().sum();
                gm += spec.weight_decay *
                      wm.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
            } else if (spec.weight_decay_p == 2) {
                loss += spec.weight_decay * wm.squaredNorm();
                gm += spec.weight_decay * 2.0 * wm;
            } else {
                throw ArgumentError("weight_decay_p must be 1 or 2");
            }
        };
        for (int b = 0; b < p.blocks(); ++b) add_decay(p.w.input[b], res.grads.input[b]);
        for (std::size_t m = 0; m < p.w.hidden.size(); ++m) add_decay(p.w.hidden[m], res.grads.hidden[m]);
        add_decay(p.w.output, res.grads.output);
    }

    // masked coordinates carry no gradient
    for (int b = 0; b < p.blocks(); ++b)
        res.grads.input[b].row(p.mask_row(b)).setZero();

    res.loss = loss;
    return res;
}

} // namespace

Matrix forward(const NetworkParams& p, const Matrix& xt) {
    p.validate();
    if (xt.cols() != p.shape.d + 1)
        throw DimensionError("forward: sample matrix must have d+1 columns");
    Matrix out(xt.rows(), p.heads());
    if (p.arch == Arch::Castle) {
        for (int k = 0; k < p.heads(); ++k) {
            HeadTrace tr;
            run_chain(p, xt, k, tr, 0.0, nullptr);
            out.col(k) = tr.post.back() * p.w.output.col(k);
        }
    } else {
        HeadTrace tr;
        run_chain(p, xt, 0, tr, 0.0, nullptr);
        out = tr.post.back() * p.w.output;
    }
    if (!out.allFinite()) throw NumericError("forward: non-finite network output");
    return out;
}

Vector forward_head(const NetworkParams& p, const Matrix& xt, int head) {
    p.validate();
    if (xt.cols() != p.shape.d + 1)
        throw DimensionError("forward_head: sample matrix must have d+1 columns");
    if (head < 0 || head >= p.heads())
        throw ArgumentError("forward_head: head index out of range");
    HeadTrace tr;
    run_chain(p, xt, p.block_of_head(head), tr, 0.0, nullptr);
    Vector out = tr.post.back() * p.w.output.col(head);
    if (!out.allFinite()) throw NumericError("forward_head: non-finite network output");
    return out;
}

BackwardResult backward(const NetworkParams& p, const Matrix& xt, const LossSpec& spec) {
    return backward_impl(p, xt, spec, 0.0, nullptr);
}

BackwardResult backward_dropout(const NetworkParams& p, const Matrix& xt, const LossSpec& spec,
                                double dropout_rate, Rng& rng) {
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ArgumentError("dropout rate must be in [0, 1)");
    if (dropout_rate == 0.0) return backward_impl(p, xt, spec, 0.0, nullptr);
    return backward_impl(p, xt, spec, dropout_rate, &rng);
}

void adam_step(AdamState& st, NetworkParams& p, const ParamBlocks& grads) {
    std::string block;
    if (!grads.all_finite(&block))
        throw NumericError("adam_step: non-finite gradient in block " + block);

    st.t += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    auto update = [&](Matrix& w, Matrix& m, Matrix& v, const Matrix& g) {
        m = st.beta1 * m + (1.0 - st.beta1) * g;
        v = st.beta2 * v + (1.0 - st.beta2) * g.cwiseProduct(g);
        Matrix mhat = m / bc1;
        Matrix vhat = v / bc2;
        w -= st.learning_rate *
             mhat.cwiseQuotient(vhat.cwiseSqrt() +
                                Matrix::Constant(vhat.rows(), vhat.cols(), st.epsilon));
    };
    for (std::size_t b = 0; b < p.w.input.size(); ++b)
        update(p.w.input[b], st.m.input[b], st.v.input[b], grads.input[b]);
    for (std::size_t m = 0; m < p.w.hidden.size(); ++m)
        update(p.w.hidden[m], st.m.hidden[m], st.v.hidden[m], grads.hidden[m]);
    update(p.w.output, st.m.output, st.v.output, grads.output);
    p.apply_masks();
}

namespace {

void write_matrix(std::ofstream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(double));
        }
}

Matrix read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(double));
            m(i, j) = v;
        }
    if (!in) throw DataError("checkpoint: truncated matrix data");
    return m;
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("checkpoint: truncated header");
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const NetworkParams& p,
                     std::uint64_t seed, Task task) {
    p.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(p.arch));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(task));
    write_pod<std::int32_t>(out, p.shape.d);
    write_pod<std::int32_t>(out, p.shape.depth);
    write_pod<std::int32_t>(out, p.shape.width());
    write_pod<std::uint64_t>(out, seed);
    for (const auto& m : p.w.input) write_matrix(out, m);
    for (const auto& m : p.w.hidden) write_matrix(out, m);
    write_matrix(out, p.w.output);
    if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("checkpoint: bad magic header");
    auto version = read_pod<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ck;
    ck.params.arch = static_cast<Arch>(read_pod<std::uint8_t>(in));
    ck.task = static_cast<Task>(read_pod<std::uint8_t>(in));
    ck.params.shape.d = read_pod<std::int32_t>(in);
    ck.params.shape.depth = read_pod<std::int32_t>(in);
    ck.params.shape.hidden = read_pod<std::int32_t>(in);
    ck.seed = read_pod<std::uint64_t>(in);

    NetworkParams& p = ck.params;
    const int h = p.shape.width();
    const int dp1 = p.shape.d + 1;
    p.w.input.resize(p.blocks());
    for (int b = 0; b < p.blocks(); ++b) p.w.input[b] = read_matrix(in, dp1, h);
    p.w.hidden.resize(p.shape.depth - 2);
    for (int m = 0; m < p.shape.depth - 2; ++m) p.w.hidden[m] = read_matrix(in, h, h);
    p.w.output = read_matrix(in, h, p.heads());
    p.validate();
    return ck;
}

} // namespace castle
