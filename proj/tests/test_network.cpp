#include "doctest.h"

#include <cmath>
#include <vector>

#include "castle/loss.hpp"
#include "castle/network.hpp"

using namespace castle;

namespace {

// Smallest |pre-activation| across all heads; finite-difference checks skip
// configurations with a ReLU kink within reach of the step.
double min_abs_preactivation(const NetworkParams& p, const Matrix& xt) {
    if (p.shape.depth == 2) return 1.0;
    double best = 1.0;
    for (int k = 0; k < p.heads(); ++k) {
        Matrix h = xt * p.w.input[p.block_of_head(k)];
        best = std::min(best, h.cwiseAbs().minCoeff());
        h = h.cwiseMax(0.0);
        for (const auto& wm : p.w.hidden) {
            h = h * wm;
            best = std::min(best, h.cwiseAbs().minCoeff());
            h = h.cwiseMax(0.0);
        }
    }
    return best;
}

double min_abs_input_weight(const NetworkParams& p) {
    double best = 1.0;
    for (int b = 0; b < p.blocks(); ++b) {
        const Matrix& w = p.w.input[b];
        for (int i = 0; i < w.rows(); ++i) {
            if (i == p.mask_row(b)) continue;
            for (int j = 0; j < w.cols(); ++j) best = std::min(best, std::abs(w(i, j)));
        }
    }
    return best;
}

struct FdCheck {
    double max_rel_err = 0.0;
    int coords = 0;
};

FdCheck finite_difference_check(NetworkParams p, const Matrix& xt, const LossSpec& spec) {
    const double step = 1e-5;
    BackwardResult br = backward(p, xt, spec);

    FdCheck out;
    auto check_block = [&](Matrix& w, const Matrix& g, int masked_row) {
        for (int i = 0; i < w.rows(); ++i) {
            if (i == masked_row) continue;
            for (int j = 0; j < w.cols(); ++j) {
                double orig = w(i, j);
                w(i, j) = orig + step;
                double up = castle_objective(p, xt, spec);
                w(i, j) = orig - step;
                double down = castle_objective(p, xt, spec);
                w(i, j) = orig;
                double fd = (up - down) / (2.0 * step);
                double a = g(i, j);
                double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
                out.max_rel_err = std::max(out.max_rel_err, std::abs(a - fd) / denom);
                out.coords++;
            }
        }
    };
    for (int b = 0; b < p.blocks(); ++b)
        check_block(p.w.input[b], br.grads.input[b], p.mask_row(b));
    for (std::size_t m = 0; m < p.w.hidden.size(); ++m)
        check_block(p.w.hidden[m], br.grads.hidden[m], -1);
    check_block(p.w.output, br.grads.output, -1);
    return out;
}

} // namespace

TEST_CASE("init_params masks, bounds and determinism") {
    NetworkShape shape{3, 3, 4};
    Rng rng(11);
    NetworkParams p = init_params(shape, rng);
    for (int k = 0; k < 4; ++k)
        CHECK(p.w.input[k].row(k).cwiseAbs().sum() == 0.0);

    NetworkParams q = init_params(shape, Rng(11));
    for (int k = 0; k < 4; ++k) CHECK(p.w.input[k] == q.w.input[k]);
    CHECK(p.w.hidden[0] == q.w.hidden[0]);
    CHECK(p.w.output == q.w.output);

    const double bound = std::sqrt(6.0 / (4.0 + 4.0));
    double max_entry = 0.0;
    long entries = 0;
    for (int rep = 0; rep < 200; ++rep) {
        NetworkParams r = init_params(shape, Rng(1000 + rep));
        for (const auto& w : r.w.input) {
            max_entry = std::max(max_entry, w.cwiseAbs().maxCoeff());
            entries += w.size();
        }
    }
    CHECK(entries >= 10000);
    CHECK(max_entry <= bound);
}

TEST_CASE("forward zero params and mask invariance") {
    NetworkShape shape{3, 3, 4};
    NetworkParams p = init_params(shape, Rng(5));
    for (auto& w : p.w.input) w.setZero();
    for (auto& w : p.w.hidden) w.setZero();
    p.w.output.setZero();
    Rng data(9);
    Matrix xt = gaussian_matrix(data, 6, 4);
    CHECK(forward(p, xt).cwiseAbs().maxCoeff() == 0.0);

    // output column k must not move when input column k moves
    NetworkParams q = init_params(shape, Rng(6));
    Matrix x2 = xt;
    Matrix base = forward(q, xt);
    for (int k = 0; k < 4; ++k) {
        Matrix pert = xt;
        pert.col(k).array() += 10.0;
        Matrix out = forward(q, pert);
        for (int i = 0; i < out.rows(); ++i)
            CHECK(out(i, k) == base(i, k)); // exact, 0 ulp
    }
}

TEST_CASE("forward hand-computed two-variable example") {
    NetworkShape shape{1, 3, 1};
    NetworkParams p;
    p.shape = shape;
    p.arch = Arch::Castle;
    p.w.input = {Matrix(2, 1), Matrix(2, 1)};
    p.w.input[0] << 0.0, 1.0;
    p.w.input[1] << 1.0, 0.0;
    p.w.hidden = {Matrix(1, 1)};
    p.w.hidden[0] << 1.0;
    p.w.output = Matrix(1, 2);
    p.w.output << 1.0, 1.0;

    Matrix xt(1, 2);
    xt << 1.0, 2.0;
    Matrix out = forward(p, xt);
    CHECK(out(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(out(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("forward dimension mismatch") {
    NetworkParams p = init_params({3, 3, 4}, Rng(5));
    CHECK_THROWS_AS(forward(p, Matrix::Zero(5, 3)), DimensionError);
}

TEST_CASE("backward zero-loss configuration has zero gradients") {
    NetworkShape shape{3, 3, 4};
    NetworkParams p = init_params(shape, Rng(5));
    for (auto& w : p.w.input) w.setZero();
    for (auto& w : p.w.hidden) w.setZero();
    p.w.output.setZero();
    Matrix xt = Matrix::Zero(5, 4);
    LossSpec spec;
    spec.lambda = 1.0;
    spec.beta = 0.0;
    BackwardResult br = backward(p, xt, spec);
    CHECK(br.loss == 0.0);
    for (const auto& g : br.grads.input) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& g : br.grads.hidden) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    CHECK(br.grads.output.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward matches castle_objective value") {
    Rng rng(314);
    for (int rep = 0; rep < 10; ++rep) {
        NetworkShape shape{3, 3, 0};
        NetworkParams p = init_params(shape, rng.fork(rep));
        Rng data = rng.fork(100 + rep);
        Matrix xt = gaussian_matrix(data, 7, 4);
        LossSpec spec;
        spec.lambda = 0.7;
        spec.beta = 0.15;
        BackwardResult br = backward(p, xt, spec);
        CHECK(br.loss == doctest::Approx(castle_objective(p, xt, spec)).epsilon(1e-12));
    }
}

TEST_CASE("backward gradients match finite differences on the named example") {
    Rng rng(271828);
    int done = 0, attempt = 0;
    while (done < 3 && attempt < 100) {
        ++attempt;
        NetworkParams p = init_params({3, 3, 4}, rng.fork(attempt));
        Rng data = rng.fork(500 + attempt);
        Matrix xt = gaussian_matrix(data, 5, 4);
        if (min_abs_preactivation(p, xt) < 1e-4) continue;
        if (min_abs_input_weight(p) < 1e-4) continue;
        LossSpec spec;
        spec.lambda = 0.5;
        spec.beta = 0.2;
        FdCheck fc = finite_difference_check(p, xt, spec);
        CHECK(fc.max_rel_err < 1e-4);
        ++done;
    }
    CHECK(done == 3);
}

TEST_CASE("backward finite differences across 50 random configurations") {
    Rng rng(777);
    int done = 0, attempt = 0;
    while (done < 50 && attempt < 600) {
        ++attempt;
        Rng cfg = rng.fork(attempt);
        int d = 2 + static_cast<int>(cfg.next_below(5));  // 2..6
        int h = 1 + static_cast<int>(cfg.next_below(5));  // 1..5
        int m = 2 + static_cast<int>(cfg.next_below(3));  // 2..4
        NetworkParams p = init_params({d, m, h}, cfg.fork(1));
        Rng data = cfg.fork(2);
        Matrix xt = gaussian_matrix(data, 5, d + 1);

        LossSpec spec;
        spec.lambda = 0.8;
        spec.beta = 0.1;
        if (done % 3 == 1) {
            // classification config: binarize the target column
            spec.task = Task::BinaryClassification;
            for (int i = 0; i < xt.rows(); ++i) xt(i, 0) = xt(i, 0) > 0.0 ? 1.0 : 0.0;
        }
        if (done % 5 == 2 && d >= 2) {
            Rng sub = cfg.fork(3);
            spec.subsample = subsample_columns(d, std::max(1, d / 2), sub);
        }
        if (done % 7 == 3) {
            spec.weight_decay_p = 2;
            spec.weight_decay = 0.05;
        }

        if (min_abs_preactivation(p, xt) < 1e-4) continue;
        if (min_abs_input_weight(p) < 1e-4) continue;

        FdCheck fc = finite_difference_check(p, xt, spec);
        CHECK(fc.max_rel_err < 1e-4);
        ++done;
    }
    CHECK(done == 50);
}

TEST_CASE("masked coordinates receive zero gradient for every loss spec") {
    Rng rng(31337);
    NetworkParams p = init_params({4, 3, 3}, rng);
    Rng data(55);
    Matrix xt = gaussian_matrix(data, 6, 5);
    for (double lambda : {0.0, 1.0}) {
        LossSpec spec;
        spec.lambda = lambda;
        spec.beta = 0.3;
        BackwardResult br = backward(p, xt, spec);
        for (int b = 0; b < p.blocks(); ++b)
            CHECK(br.grads.input[b].row(p.mask_row(b)).cwiseAbs().sum() == 0.0);
    }
}

TEST_CASE("adam_step basics and hand trace") {
    NetworkShape shape{1, 2, 1};
    NetworkParams p = init_params(shape, Rng(3));
    NetworkParams p0 = p;
    AdamState st = make_adam_state(p, 0.001);

    ParamBlocks zero;
    zero.set_zero_like(p.w);
    adam_step(st, p, zero);
    adam_step(st, p, zero);
    CHECK(p.w.output == p0.w.output);
    CHECK(p.w.input[0] == p0.w.input[0]);

    // first nonzero step moves by -lr*sign(g) up to O(epsilon)
    st = make_adam_state(p, 0.001);
    ParamBlocks g;
    g.set_zero_like(p.w);
    g.output(0, 0) = 2.5;
    double before = p.w.output(0, 0);
    adam_step(st, p, g);
    CHECK(std::abs((p.w.output(0, 0) - before) + 0.001) < 1e-9);

    // two scripted steps, g=1 then g=-1, against hand-run recurrences
    double w = 0.2, m = 0.0, v = 0.0;
    const double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 2; ++t) {
        double grad = (t == 1) ? 1.0 : -1.0;
        m = b1 * m + (1 - b1) * grad;
        v = b2 * v + (1 - b2) * grad * grad;
        double mhat = m / (1 - std::pow(b1, t));
        double vhat = v / (1 - std::pow(b2, t));
        w -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    NetworkParams q = init_params(shape, Rng(3));
    q.w.output(0, 0) = 0.2;
    AdamState st2 = make_adam_state(q, 0.001);
    ParamBlocks g2;
    g2.set_zero_like(q.w);
    g2.output(0, 0) = 1.0;
    adam_step(st2, q, g2);
    g2.output(0, 0) = -1.0;
    adam_step(st2, q, g2);
    CHECK(std::abs(q.w.output(0, 0) - w) < 1e-12);

    // non-finite gradients are rejected with the block named
    ParamBlocks bad;
    bad.set_zero_like(q.w);
    bad.input[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(adam_step(st2, q, bad),
                         doctest::Contains("input[1]"), NumericError);
}

TEST_CASE("mask invariance holds through init and adam steps") {
    NetworkShape shape{3, 3, 4};
    NetworkParams p = init_params(shape, Rng(21));
    AdamState st = make_adam_state(p, 0.01);
    Rng data(77);
    Matrix xt = gaussian_matrix(data, 16, 4);
    LossSpec spec;
    spec.lambda = 1.0;
    spec.beta = 0.1;
    for (int step = 0; step < 25; ++step) {
        BackwardResult br = backward(p, xt, spec);
        adam_step(st, p, br.grads);
        for (int k = 0; k < p.blocks(); ++k)
            CHECK(p.w.input[k].row(k).cwiseAbs().sum() == 0.0);
    }
}

TEST_CASE("M=2 h=1 network reproduces the linear model") {
    NetworkShape shape{3, 2, 1};
    NetworkParams p = init_params(shape, Rng(8));
    p.w.output.setOnes(); // output scale 1 so the induced linear map is W1 itself
    Rng data(12);
    Matrix xt = gaussian_matrix(data, 9, 4);

    Matrix w(4, 4);
    for (int k = 0; k < 4; ++k) w.col(k) = p.w.input[k].col(0);
    Matrix direct = xt * w;
    Matrix viaforward = forward(p, xt);
    CHECK((direct - viaforward).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("checkpoint round trip is exact") {
    NetworkParams p = init_params({4, 3, 5}, Rng(2025));
    save_checkpoint("/tmp/castle_test.ckpt", p, 987654321ULL, Task::BinaryClassification);
    Checkpoint ck = load_checkpoint("/tmp/castle_test.ckpt");
    CHECK(ck.seed == 987654321ULL);
    CHECK(ck.task == Task::BinaryClassification);
    CHECK(ck.params.arch == Arch::Castle);
    CHECK(ck.params.shape.d == 4);
    for (int b = 0; b < p.blocks(); ++b) CHECK(ck.params.w.input[b] == p.w.input[b]);
    CHECK(ck.params.w.output == p.w.output);
    CHECK_THROWS_AS(load_checkpoint("/tmp/definitely_missing.ckpt"), DataError);
}
