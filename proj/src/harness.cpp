#include "castle/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace castle {

std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed) {
    if (k < 2) throw ArgumentError("kfold_split: k must be >= 2");
    if (n < k) throw ArgumentError("kfold_split: need n >= k");
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed, 0xF01D5);
    rng.shuffle(idx);
    std::vector<std::vector<int>> folds(k);
    for (int i = 0; i < n; ++i) folds[i % k].push_back(idx[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

Matrix Standardizer::apply(const Matrix& rows) const {
    if (rows.cols() != mean.size())
        throw DimensionError("Standardizer: column count mismatch");
    Matrix out = rows;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        if (exempt[j]) continue;
        out.col(j) = (rows.col(j).array() - mean[j]) / stddev[j];
    }
    return out;
}

Standardizer fit_standardizer(const Matrix& train_rows, const std::vector<bool>& exempt_cols) {
    if (train_rows.rows() < 1) throw ArgumentError("fit_standardizer: empty training rows");
    if (static_cast<Eigen::Index>(exempt_cols.size()) != train_rows.cols())
        throw DimensionError("fit_standardizer: exempt flag count mismatch");
    Standardizer s;
    s.exempt = exempt_cols;
    s.mean.resize(train_rows.cols());
    s.stddev.resize(train_rows.cols());
    const double n = static_cast<double>(train_rows.rows());
    for (Eigen::Index j = 0; j < train_rows.cols(); ++j) {
        double m = train_rows.col(j).mean();
        double var = (train_rows.col(j).array() - m).square().sum() / n;
        double sd = std::sqrt(var);
        s.mean[j] = exempt_cols[j] ? 0.0 : m;
        s.stddev[j] = exempt_cols[j] ? 1.0 : (sd > 0.0 ? sd : 1.0);
        if (exempt_cols[j]) {
            s.mean[j] = 0.0;
            s.stddev[j] = 1.0;
        }
    }
    return s;
}

double mse(const Vector& pred, const Vector& y) {
    if (pred.size() != y.size()) throw DimensionError("mse: length mismatch");
    if (pred.size() < 1) throw DimensionError("mse: empty vectors");
    return (pred - y).squaredNorm() / static_cast<double>(pred.size());
}

double auroc(const Vector& scores, const Vector& labels) {
    if (scores.size() != labels.size()) throw DimensionError("auroc: length mismatch");
    const int n = static_cast<int>(scores.size());
    int n_pos = 0;
    for (int i = 0; i < n; ++i) {
        if (labels[i] != 0.0 && labels[i] != 1.0)
            throw DataError("auroc: labels must be 0 or 1");
        n_pos += labels[i] == 1.0;
    }
    const int n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("auroc: needs both classes present");

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scores[a] < scores[b]; });

    // midranks over tied score groups
    std::vector<double> rank(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double mid = 0.5 * static_cast<double>(i + 1 + j); // average of ranks i+1..j
        for (int t = i; t < j; ++t) rank[order[t]] = mid;
        i = j;
    }
    double rank_sum_pos = 0.0;
    for (int t = 0; t < n; ++t)
        if (labels[t] == 1.0) rank_sum_pos += rank[t];
    double u = rank_sum_pos - 0.5 * n_pos * (n_pos + 1.0);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<RankSummary> average_rank(const MetricsTable& table) {
    if (table.rows.empty()) throw ArgumentError("average_rank: empty table");

    std::vector<std::string> regs;
    for (const auto& r : table.rows)
        if (std::find(regs.begin(), regs.end(), r.regularizer) == regs.end())
            regs.push_back(r.regularizer);

    // cells keyed by (dataset, fold)
    std::map<std::pair<std::string, int>, std::vector<const MetricsRow*>> cells;
    for (const auto& r : table.rows) cells[{r.dataset, r.fold}].push_back(&r);

    std::map<std::string, std::vector<double>> rank_lists;
    for (auto& [key, rows] : cells) {
        if (rows.size() != regs.size())
            throw ArgumentError("average_rank: incomplete grid at dataset '" + key.first +
                                "' fold " + std::to_string(key.second));
        // orientation: lower mse is better, higher auroc is better
        std::vector<std::pair<double, const MetricsRow*>> keyed;
        for (const MetricsRow* r : rows) {
            double v = r->metric == "auroc" ? -r->score : r->score;
            keyed.emplace_back(v, r);
        }
        std::sort(keyed.begin(), keyed.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t i = 0;
        while (i < keyed.size()) {
            std::size_t j = i;
            while (j < keyed.size() && keyed[j].first == keyed[i].first) ++j;
            double mid = 0.5 * static_cast<double>(i + 1 + j);
            for (std::size_t t = i; t < j; ++t)
                rank_lists[keyed[t].second->regularizer].push_back(mid);
            i = j;
        }
    }

    std::vector<RankSummary> out;
    for (const auto& reg : regs) {
        const auto& v = rank_lists[reg];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
        out.push_back({reg, mean, std::sqrt(var)});
    }
    return out;
}

void save_metrics_csv(const std::string& path, const MetricsTable& table) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open metrics file: " + path);
    out << "dataset,regularizer,fold,metric,score,seconds\n";
    char buf[40];
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.score);
        out << r.dataset << "," << r.regularizer << "," << r.fold << "," << r.metric << ","
            << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.3f", r.seconds);
        out << buf << "\n";
    }
}

void save_ranks_csv(const std::string& path, const std::vector<RankSummary>& ranks) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open ranks file: " + path);
    out << "regularizer,mean_rank,std_rank\n";
    char buf[40];
    for (const auto& r : ranks) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.mean_rank);
        out << r.regularizer << "," << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", r.std_rank);
        out << buf << "\n";
    }
}

namespace {

std::string trim_str(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim_str(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split_list(s)) out.push_back(std::stod(tok));
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ArgumentError("config: expected a boolean, got '" + v + "'");
}

} // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset") cfg.dataset = value;
    else if (key == "target") cfg.target_column = value;
    else if (key == "task") {
        if (value == "regression") cfg.task = Task::Regression;
        else if (value == "classification") cfg.task = Task::BinaryClassification;
        else throw ArgumentError("config: unknown task '" + value + "'");
    }
    else if (key == "n") cfg.n = std::stoi(value);
    else if (key == "test_n") cfg.test_n = std::stoi(value);
    else if (key == "nodes") cfg.nodes = std::stoi(value);
    else if (key == "branching") cfg.branching = std::stoi(value);
    else if (key == "noise_vars") cfg.noise_vars = std::stoi(value);
    else if (key == "sem_link") {
        if (value == "sigmoid") cfg.sem_link = LinkKind::Sigmoid;
        else if (value == "linear") cfg.sem_link = LinkKind::Identity;
        else throw ArgumentError("config: unknown sem_link '" + value + "'");
    }
    else if (key == "sem_sigma") cfg.sem_sigma = std::stod(value);
    else if (key == "edge_weight") cfg.edge_weight = std::stod(value);
    else if (key == "orphan_target") cfg.orphan_target = parse_bool(value);
    else if (key == "repeats") cfg.repeats = std::stoi(value);
    else if (key == "test_fraction") cfg.test_fraction = std::stod(value);
    else if (key == "regularizers") cfg.regularizers = split_list(value);
    else if (key == "folds") cfg.folds = std::stoi(value);
    else if (key == "lambda") cfg.lambda = std::stod(value);
    else if (key == "beta_grid") cfg.beta_grid = split_doubles(value);
    else if (key == "epochs") cfg.epochs = std::stoi(value);
    else if (key == "patience") cfg.patience = std::stoi(value);
    else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
    else if (key == "batch") cfg.batch = std::stoi(value);
    else if (key == "depth") cfg.depth = std::stoi(value);
    else if (key == "hidden") cfg.hidden = std::stoi(value);
    else if (key == "subsample") {
        if (value == "auto") cfg.subsample = -1;
        else if (value == "off") cfg.subsample = 0;
        else cfg.subsample = std::stoi(value);
    }
    else if (key == "ablate_reconstruction") cfg.ablate_reconstruction = parse_bool(value);
    else if (key == "ablate_acyclicity") cfg.ablate_acyclicity = parse_bool(value);
    else if (key == "ablate_input_l1") cfg.ablate_input_l1 = parse_bool(value);
    else if (key == "linear_model") cfg.linear_model = parse_bool(value);
    else if (key == "metric_scale") {
        if (value != "standardized" && value != "raw")
            throw ArgumentError("config: metric_scale must be standardized or raw");
        cfg.metric_scale = value;
    }
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "jobs") cfg.jobs = std::stoi(value);
    else if (key == "write_history") cfg.write_history = parse_bool(value);
    else if (key == "write_edges") cfg.write_edges = parse_bool(value);
    else if (key == "edge_threshold") cfg.edge_threshold = std::stod(value);
    else throw ArgumentError("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path);
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim_str(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
        apply_config_entry(cfg, trim_str(t.substr(0, eq)), trim_str(t.substr(eq + 1)));
    }
    return cfg;
}

} // namespace castle
