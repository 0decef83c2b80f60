#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "castle/dataset.hpp"
#include "castle/linalg.hpp"
#include "castle/network.hpp"
#include "castle/regularizers.hpp"
#include "castle/rng.hpp"
#include "castle/synth.hpp"

namespace castle {

// ---------------------------------------------------------------- splits ---

// Disjoint, exhaustive, size-balanced (+-1) folds from a seeded shuffle.
std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed);

// -------------------------------------------------------- standardization ---

// Column-wise affine transform fitted on training rows only. Exempt columns
// pass through unchanged; constant columns get their std clamped to 1.
struct Standardizer {
    Vector mean;
    Vector stddev;
    std::vector<bool> exempt;

    Matrix apply(const Matrix& rows) const;
    double target_mean() const { return mean[0]; }
    double target_std() const { return stddev[0]; }
};

Standardizer fit_standardizer(const Matrix& train_rows, const std::vector<bool>& exempt_cols);

// ---------------------------------------------------------------- metrics ---

double mse(const Vector& pred, const Vector& y);

// Mann-Whitney pair statistic with ties counted one half.
double auroc(const Vector& scores, const Vector& labels);

// --------------------------------------------------------------- training ---

struct TrainConfig {
    double lambda = 1.0;
    std::vector<double> beta_grid = {0.001, 0.01, 0.1, 1.0};
    double learning_rate = 0.001;
    int epochs = 200;
    int patience = 30;
    int batch = 32;
    int subsample = -1; // -1 auto (on above 64 features), 0 off, >0 explicit count
    int depth = 3;
    int hidden = 0; // 0 resolves to d+1
    Task task = Task::Regression;
    bool ablate_reconstruction = false;
    bool ablate_acyclicity = false;
    bool ablate_input_l1 = false;
    bool linear_model = false; // castle fits the closed linear variant
    int linear_iterations = 3000;
    double linear_learning_rate = 0.01;
};

struct EpochRecord {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainedModel {
    NetworkParams params;       // weights at the best validation epoch
    Matrix linear_w;            // used instead of params when is_linear
    bool is_linear = false;
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val = std::numeric_limits<double>::infinity();
    double chosen_strength = 0.0; // grid value selected on validation
};

// Adam training with the selected regularizer and early stopping on the
// validation prediction loss; returns the parameter snapshot at the best
// validation epoch. Strength grids are searched by validation loss.
TrainedModel train_model(const Matrix& train, const Matrix& val, const RegularizerSpec& reg,
                         const TrainConfig& cfg, const Rng& rng);

// Head-0 model output; sigmoid applied for classification tasks.
Vector predict_scores(const TrainedModel& model, const Matrix& xt, Task task);

// ------------------------------------------------------------- experiment ---

struct ExperimentConfig {
    // data source: synth:toy-nonlinear, synth:toy-linear, synth:random, csv:<path>
    std::string dataset = "synth:random";
    std::string target_column = "y";
    Task task = Task::Regression;
    int n = 1000;      // synthetic training pool size
    int test_n = 1000; // synthetic held-out test size
    int nodes = 10;
    int branching = -1; // -1 draws uniformly from [1, nodes] per dataset
    int noise_vars = 0;
    LinkKind sem_link = LinkKind::Sigmoid;
    double sem_sigma = 0.0; // 0 draws sigma from U[0.3, 1] per dataset
    double edge_weight = 1.0;
    bool orphan_target = false;
    int repeats = 1;
    double test_fraction = 0.2; // csv test reserve

    std::vector<std::string> regularizers = {"castle", "baseline"};
    int folds = 10;
    double lambda = 1.0;
    std::vector<double> beta_grid = {0.001, 0.01, 0.1, 1.0};
    int epochs = 200;
    int patience = 30;
    double learning_rate = 0.001;
    int batch = 32;
    int depth = 3;
    int hidden = 0;
    int subsample = -1;
    bool ablate_reconstruction = false;
    bool ablate_acyclicity = false;
    bool ablate_input_l1 = false;
    bool linear_model = false;
    std::string metric_scale = "standardized"; // or "raw"
    std::uint64_t seed = 1;
    int jobs = 1;
    bool write_history = false;
    bool write_edges = false;
    double edge_threshold = 0.3;
};

// Flat "key = value" config file; unknown keys are errors.
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct MetricsRow {
    std::string dataset;
    std::string regularizer;
    int fold = 0;
    std::string metric; // "mse" or "auroc"
    double score = 0.0;
    double seconds = 0.0;
};

struct MetricsTable {
    std::vector<MetricsRow> rows;
};

struct RankSummary {
    std::string regularizer;
    double mean_rank = 0.0;
    double std_rank = 0.0;
};

// Per-regularizer mean rank (1 = best) with standard deviation across
// (dataset, fold) cells; ties get the mean of the tied ranks. The grid must
// be complete.
std::vector<RankSummary> average_rank(const MetricsTable& table);

void save_metrics_csv(const std::string& path, const MetricsTable& table);
void save_ranks_csv(const std::string& path, const std::vector<RankSummary>& ranks);

// Full grid execution: datasets x regularizers x folds, deterministic in the
// master seed for any job count. out_dir may be empty to skip artifacts.
MetricsTable run_experiment(const ExperimentConfig& cfg, const std::string& out_dir = "");

} // namespace castle
