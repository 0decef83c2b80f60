#include "castle/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "castle/analysis.hpp"
#include "castle/loss.hpp"

namespace castle {

namespace {

namespace fs = std::filesystem;

struct PreparedDataset {
    std::string name;
    Dataset pool;  // training pool (folds are drawn from these rows)
    Matrix test;   // held-out test rows, raw scale
    Dag truth;     // column-relabeled ground truth (synthetic sources)
    bool has_truth = false;
};

PreparedDataset prepare_toy(const ExperimentConfig& cfg, bool linear_link, int repeat,
                            const Rng& master) {
    Dag dag = toy_dag();
    SemSpec sem;
    sem.sigma = cfg.sem_sigma > 0.0 ? cfg.sem_sigma : 1.0;
    sem.w = cfg.edge_weight; // scales the fixture weights; 1 keeps them as committed
    sem.link = linear_link ? LinkKind::Identity : LinkKind::Sigmoid;

    Rng rng = master.fork(0xD0000 + static_cast<std::uint64_t>(repeat));
    PreparedDataset out;
    out.pool = gen_data(dag, sem, cfg.n, rng);
    Dataset test_ds = gen_data(dag, sem, cfg.test_n, rng);
    if (cfg.noise_vars > 0) {
        out.pool = add_noise_vars(out.pool, cfg.noise_vars, rng);
        test_ds = add_noise_vars(test_ds, cfg.noise_vars, rng);
    }
    out.test = test_ds.xt;
    out.truth = column_dag(dag);
    out.has_truth = true;
    out.name = cfg.repeats > 1 ? "toy" + std::to_string(repeat) : "toy";
    return out;
}

PreparedDataset prepare_random(const ExperimentConfig& cfg, int repeat, const Rng& master) {
    Rng rng = master.fork(0xD0000 + static_cast<std::uint64_t>(repeat));
    int branching = cfg.branching;
    if (branching < 0)
        branching = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.nodes)));
    Dag dag = gen_dag(cfg.nodes, branching, rng, cfg.edge_weight);
    choose_target(dag, rng, cfg.orphan_target);

    SemSpec sem;
    sem.sigma = cfg.sem_sigma > 0.0 ? cfg.sem_sigma : draw_sem_sigma(rng);
    sem.link = cfg.sem_link;

    PreparedDataset out;
    out.pool = gen_data(dag, sem, cfg.n, rng);
    Dataset test_ds = gen_data(dag, sem, cfg.test_n, rng);
    if (cfg.noise_vars > 0) {
        out.pool = add_noise_vars(out.pool, cfg.noise_vars, rng);
        test_ds = add_noise_vars(test_ds, cfg.noise_vars, rng);
    }
    out.test = test_ds.xt;
    out.truth = column_dag(dag);
    out.has_truth = true;
    out.name = "dag" + std::to_string(repeat);
    return out;
}

PreparedDataset prepare_csv(const ExperimentConfig& cfg, const std::string& path,
                            const Rng& master) {
    Dataset full = load_csv(path, cfg.target_column, cfg.task);
    const int n = full.n();
    int test_n = static_cast<int>(std::lround(cfg.test_fraction * n));
    test_n = std::max(1, std::min(test_n, n - 2));

    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    Rng rng = master.fork(0xC57);
    rng.shuffle(idx);

    PreparedDataset out;
    out.test.resize(test_n, full.xt.cols());
    for (int i = 0; i < test_n; ++i) out.test.row(i) = full.xt.row(idx[i]);
    out.pool = full;
    out.pool.xt.resize(n - test_n, full.xt.cols());
    for (int i = test_n; i < n; ++i) out.pool.xt.row(i - test_n) = full.xt.row(idx[i]);
    out.name = fs::path(path).stem().string();
    return out;
}

std::vector<PreparedDataset> prepare_datasets(const ExperimentConfig& cfg) {
    Rng master(cfg.seed);
    std::vector<PreparedDataset> out;
    if (cfg.dataset == "synth:toy-nonlinear" || cfg.dataset == "synth:toy-linear") {
        bool linear = cfg.dataset == "synth:toy-linear";
        for (int r = 0; r < cfg.repeats; ++r) out.push_back(prepare_toy(cfg, linear, r, master));
    } else if (cfg.dataset == "synth:random") {
        if (cfg.task == Task::BinaryClassification)
            throw ArgumentError("synthetic datasets are regression tasks");
        for (int r = 0; r < cfg.repeats; ++r) out.push_back(prepare_random(cfg, r, master));
    } else if (cfg.dataset.rfind("csv:", 0) == 0) {
        out.push_back(prepare_csv(cfg, cfg.dataset.substr(4), master));
    } else {
        throw ArgumentError("unknown dataset spec: " + cfg.dataset);
    }
    return out;
}

TrainConfig train_config_of(const ExperimentConfig& cfg) {
    TrainConfig tc;
    tc.lambda = cfg.lambda;
    tc.beta_grid = cfg.beta_grid;
    tc.learning_rate = cfg.learning_rate;
    tc.epochs = cfg.epochs;
    tc.patience = cfg.patience;
    tc.batch = cfg.batch;
    tc.subsample = cfg.subsample;
    tc.depth = cfg.depth;
    tc.hidden = cfg.hidden;
    tc.task = cfg.task;
    tc.ablate_reconstruction = cfg.ablate_reconstruction;
    tc.ablate_acyclicity = cfg.ablate_acyclicity;
    tc.ablate_input_l1 = cfg.ablate_input_l1;
    tc.linear_model = cfg.linear_model;
    return tc;
}

std::string cell_tag(const PreparedDataset& ds, const std::string& reg, int fold) {
    return ds.name + "_" + reg + "_fold" + std::to_string(fold);
}

} // namespace

MetricsTable run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::vector<PreparedDataset> datasets = prepare_datasets(cfg);
    std::vector<RegularizerSpec> regs;
    for (const auto& name : cfg.regularizers) regs.push_back(parse_regularizer(name));
    if (regs.empty()) throw ArgumentError("run_experiment: no regularizers configured");
    const TrainConfig tc = train_config_of(cfg);
    Rng master(cfg.seed);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        if (cfg.write_history) fs::create_directories(fs::path(out_dir) / "history");
        if (cfg.write_edges) fs::create_directories(fs::path(out_dir) / "edges");
    }

    struct Unit {
        int dataset_idx;
        int fold;
    };
    std::vector<Unit> units;
    std::vector<std::vector<std::vector<int>>> folds_per_dataset;
    for (std::size_t di = 0; di < datasets.size(); ++di) {
        Rng fold_rng = master.fork(0xF01D + di);
        auto folds = kfold_split(datasets[di].pool.n(), cfg.folds, fold_rng.next_u64());
        folds_per_dataset.push_back(std::move(folds));
        for (int f = 0; f < cfg.folds; ++f)
            units.push_back({static_cast<int>(di), f});
    }

    std::vector<std::vector<MetricsRow>> unit_rows(units.size());

    auto run_unit = [&](std::size_t ui) {
        const Unit& unit = units[ui];
        const PreparedDataset& ds = datasets[unit.dataset_idx];
        const auto& fold = folds_per_dataset[unit.dataset_idx][unit.fold];

        // fold complement, then a seeded 20% validation split of it
        std::vector<char> in_fold(ds.pool.n(), 0);
        for (int i : fold) in_fold[i] = 1;
        std::vector<int> complement;
        for (int i = 0; i < ds.pool.n(); ++i)
            if (!in_fold[i]) complement.push_back(i);

        Rng cell_rng = master.fork(0xCE110000ULL + 4096ULL * unit.dataset_idx + unit.fold);
        Rng split_rng = cell_rng.fork(9);
        std::vector<int> shuffled = complement;
        split_rng.shuffle(shuffled);
        int val_n = std::max(1, static_cast<int>(std::lround(0.2 * shuffled.size())));
        if (val_n >= static_cast<int>(shuffled.size())) val_n = static_cast<int>(shuffled.size()) - 1;

        Matrix val_raw(val_n, ds.pool.xt.cols());
        for (int i = 0; i < val_n; ++i) val_raw.row(i) = ds.pool.xt.row(shuffled[i]);
        Matrix train_raw(shuffled.size() - val_n, ds.pool.xt.cols());
        for (std::size_t i = val_n; i < shuffled.size(); ++i)
            train_raw.row(i - val_n) = ds.pool.xt.row(shuffled[i]);

        std::vector<bool> exempt(ds.pool.xt.cols(), false);
        if (cfg.task == Task::BinaryClassification) exempt[0] = true;
        Standardizer st = fit_standardizer(train_raw, exempt);
        Matrix strain = st.apply(train_raw);
        Matrix sval = st.apply(val_raw);
        Matrix stest = st.apply(ds.test);

        for (const auto& reg : regs) {
            auto t0 = std::chrono::steady_clock::now();
            TrainedModel model = train_model(strain, sval, reg, tc, cell_rng);
            Vector scores = predict_scores(model, stest, cfg.task);

            MetricsRow row;
            row.dataset = ds.name;
            row.regularizer = reg.label;
            row.fold = unit.fold;
            if (cfg.task == Task::BinaryClassification) {
                row.metric = "auroc";
                row.score = auroc(scores, ds.test.col(0));
            } else {
                row.metric = "mse";
                if (cfg.metric_scale == "raw") {
                    Vector raw = scores * st.target_std() +
                                 Vector::Constant(scores.size(), st.target_mean());
                    row.score = mse(raw, ds.test.col(0));
                } else {
                    row.score = mse(scores, stest.col(0));
                }
            }
            auto t1 = std::chrono::steady_clock::now();
            row.seconds = std::chrono::duration<double>(t1 - t0).count();
            unit_rows[ui].push_back(row);

            if (!out_dir.empty() && cfg.write_history) {
                std::ofstream hf(fs::path(out_dir) / "history" /
                                 (cell_tag(ds, reg.label, unit.fold) + ".csv"));
                hf << "epoch,train_loss,val_loss\n";
                for (std::size_t e = 0; e < model.history.size(); ++e)
                    hf << e << "," << model.history[e].train_loss << ","
                       << model.history[e].val_loss << "\n";
            }
            if (!out_dir.empty() && cfg.write_edges && reg.kind == RegKind::Castle) {
                Matrix msum = model.is_linear ? Matrix(model.linear_w.cwiseAbs())
                                              : adjacency_summary(model.params);
                auto edges = extract_edges(msum, cfg.edge_threshold);
                save_weighted_edges(fs::path(out_dir) / "edges" /
                                        (cell_tag(ds, reg.label, unit.fold) + ".txt"),
                                    edges, ds.pool.names);
            }
        }
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (std::size_t ui = 0; ui < units.size(); ++ui) run_unit(ui);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (int t = 0; t < jobs; ++t)
            workers.emplace_back([&] {
                for (;;) {
                    std::size_t ui = next.fetch_add(1);
                    if (ui >= units.size()) break;
                    run_unit(ui);
                }
            });
        for (auto& w : workers) w.join();
    }

    MetricsTable table;
    for (const auto& rows : unit_rows)
        for (const auto& r : rows) table.rows.push_back(r);

    if (!out_dir.empty()) {
        save_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), table);
        save_ranks_csv((fs::path(out_dir) / "ranks.csv").string(), average_rank(table));
    }
    return table;
}

} // namespace castle
