#include "castle/harness.hpp"

#include <algorithm>
#include <cmath>

#include "castle/loss.hpp"

namespace castle {

namespace {

// Child-stream tags; init and shuffle are shared across regularizers and grid
// candidates so every benchmark sees identical weights and batch orders.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kSubsampleStream = 3;
constexpr std::uint64_t kRegStream = 4;

LossSpec loss_spec_for(const RegularizerSpec& reg, double strength, const TrainConfig& cfg) {
    LossSpec spec;
    spec.task = cfg.task;
    spec.lambda = 0.0;
    switch (reg.kind) {
    case RegKind::Baseline:
    case RegKind::Dropout:
    case RegKind::InputNoise:
    case RegKind::MixUp:
        break;
    case RegKind::L1:
        spec.weight_decay_p = 1;
        spec.weight_decay = strength;
        break;
    case RegKind::L2:
        spec.weight_decay_p = 2;
        spec.weight_decay = strength;
        break;
    case RegKind::Sae:
        spec.lambda = 1.0;
        spec.use_acyclicity = false;
        spec.use_input_l1 = false;
        break;
    case RegKind::Castle:
        spec.lambda = cfg.lambda;
        spec.beta = strength;
        spec.use_reconstruction = !cfg.ablate_reconstruction;
        spec.use_acyclicity = !cfg.ablate_acyclicity;
        spec.use_input_l1 = !cfg.ablate_input_l1;
        break;
    }
    return spec;
}

double validation_loss(const NetworkParams& params, const Matrix& val, Task task) {
    Vector out = forward_head(params, val, 0);
    return prediction_loss(out, val.col(0), task);
}

TrainedModel train_candidate(const Matrix& train, const Matrix& val, const RegularizerSpec& reg,
                             double strength, const TrainConfig& cfg, const Rng& rng) {
    const int d = static_cast<int>(train.cols()) - 1;
    NetworkShape shape{d, cfg.depth, cfg.hidden};
    Arch arch = reg.kind == RegKind::Castle ? Arch::Castle
               : reg.kind == RegKind::Sae   ? Arch::Sae
                                            : Arch::Single;
    NetworkParams params = init_params(shape, rng.fork(kInitStream), arch);
    AdamState adam = make_adam_state(params, cfg.learning_rate);
    Rng shuffle_rng = rng.fork(kShuffleStream);
    Rng sub_rng = rng.fork(kSubsampleStream);
    Rng reg_rng = rng.fork(kRegStream + 16 * static_cast<std::uint64_t>(reg.kind));

    LossSpec spec = loss_spec_for(reg, strength, cfg);

    int subsample_count = 0;
    if (reg.kind == RegKind::Castle && spec.use_reconstruction) {
        if (cfg.subsample > 0) subsample_count = std::min(cfg.subsample, d);
        else if (cfg.subsample < 0 && d > 64) subsample_count = std::min(d, 32);
    }

    const int n_train = static_cast<int>(train.rows());
    int batch = cfg.batch;
    if (n_train < 64) batch = n_train; // full batch on small training sets
    batch = std::max(1, std::min(batch, n_train));

    std::vector<int> idx(n_train);
    for (int i = 0; i < n_train; ++i) idx[i] = i;

    TrainedModel model;
    model.chosen_strength = strength;
    NetworkParams best = params;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(idx);
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < n_train; start += batch) {
            const int bs = std::min(batch, n_train - start);
            Matrix xb(bs, d + 1);
            for (int i = 0; i < bs; ++i) xb.row(i) = train.row(idx[start + i]);

            if (reg.kind == RegKind::InputNoise && strength > 0.0) {
                Matrix features = xb.rightCols(d);
                xb.rightCols(d) = input_noise_apply(features, strength, reg_rng);
            } else if (reg.kind == RegKind::MixUp && strength > 0.0 && bs >= 2) {
                // rows mix as a whole, so the target mixes with the same coefficient
                Vector dummy = xb.col(0);
                auto [xm, ym] = mixup_batch(xb, dummy, strength, reg_rng);
                xb = std::move(xm);
                xb.col(0) = ym;
            }

            if (subsample_count > 0)
                spec.subsample = subsample_columns(d, subsample_count, sub_rng);

            BackwardResult br =
                reg.kind == RegKind::Dropout && strength > 0.0
                    ? backward_dropout(params, xb, spec, strength, reg_rng)
                    : backward(params, xb, spec);
            adam_step(adam, params, br.grads);
            epoch_loss += br.loss;
            ++batches;
        }

        double val_loss = validation_loss(params, val, cfg.task);
        if (!std::isfinite(val_loss))
            throw NumericError("train_model: non-finite loss at epoch " + std::to_string(epoch));
        model.history.push_back({epoch_loss / batches, val_loss});
        if (val_loss < model.best_val) {
            model.best_val = val_loss;
            model.best_epoch = epoch;
            best = params;
        } else if (epoch - model.best_epoch >= cfg.patience) {
            break;
        }
    }
    model.params = std::move(best);
    return model;
}

TrainedModel train_linear_candidate(const Matrix& train, const Matrix& val, double beta,
                                    const TrainConfig& cfg) {
    LinearFitOptions opts;
    opts.iterations = cfg.linear_iterations;
    opts.learning_rate = cfg.linear_learning_rate;
    Matrix w = linear_castle_fit(train, cfg.lambda, beta, opts);

    TrainedModel model;
    model.is_linear = true;
    model.linear_w = w;
    model.chosen_strength = beta;
    model.best_epoch = 0;
    model.best_val = mse(val * w.col(0), val.col(0));
    model.history.push_back({linear_castle_objective(train, w, cfg.lambda, beta), model.best_val});
    return model;
}

} // namespace

TrainedModel train_model(const Matrix& train, const Matrix& val, const RegularizerSpec& reg,
                         const TrainConfig& cfg, const Rng& rng) {
    if (train.cols() != val.cols())
        throw DimensionError("train_model: train/validation column mismatch");
    if (train.rows() < 2) throw ArgumentError("train_model: not enough training rows");
    if (val.rows() < 1) throw ArgumentError("train_model: empty validation split");
    if (cfg.patience > cfg.epochs)
        throw ArgumentError("train_model: patience must not exceed epochs");

    std::vector<double> grid = reg.grid;
    if (reg.kind == RegKind::Castle && grid.empty()) grid = cfg.beta_grid;
    if (grid.empty()) grid = {0.0};

    TrainedModel best_model;
    for (double strength : grid) {
        TrainedModel candidate =
            cfg.linear_model && reg.kind == RegKind::Castle
                ? train_linear_candidate(train, val, strength, cfg)
                : train_candidate(train, val, reg, strength, cfg, rng);
        if (candidate.best_val < best_model.best_val) best_model = std::move(candidate);
    }
    return best_model;
}

Vector predict_scores(const TrainedModel& model, const Matrix& xt, Task task) {
    Vector out;
    if (model.is_linear) {
        out = xt * model.linear_w.col(0);
    } else {
        out = forward_head(model.params, xt, 0);
    }
    if (task == Task::BinaryClassification)
        out = out.unaryExpr([](double z) {
            return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        });
    return out;
}

} // namespace castle
