#include "doctest.h"

#include <cmath>
#include <fstream>
#include <set>

#include "castle/dataset.hpp"
#include "castle/synth.hpp"

using namespace castle;

TEST_CASE("gen_dag edge cases and acyclicity") {
    Rng rng(1);
    Dag empty = gen_dag(5, 0, rng);
    CHECK(empty.edges.empty());

    // two nodes, branching 1: exactly one edge, either direction reachable
    std::set<std::pair<int, int>> seen;
    for (int rep = 0; rep < 200; ++rep) {
        Rng r(100 + rep);
        Dag d = gen_dag(2, 1, r);
        REQUIRE(d.edges.size() == 1);
        seen.insert({d.edges[0].from, d.edges[0].to});
    }
    CHECK(seen.size() == 2);

    for (int rep = 0; rep < 50; ++rep) {
        Rng r(500 + rep);
        int nodes = 3 + static_cast<int>(r.next_below(10));
        int branching = static_cast<int>(r.next_below(nodes + 1));
        Dag d = gen_dag(nodes, branching, r);
        CHECK(d.is_acyclic());
        d.validate();
        for (int u = 0; u < nodes; ++u)
            CHECK(static_cast<int>(d.children(u).size()) <= branching);
    }
}

TEST_CASE("gen_node_values moments on an edgeless graph") {
    Rng rng(7);
    Dag d = gen_dag(3, 0, rng);
    SemSpec spec;
    spec.mu = 0.5;
    spec.sigma = 0.8;
    Matrix vals = gen_node_values(d, spec, 100000, rng);
    for (int c = 0; c < 3; ++c) {
        double mean = vals.col(c).mean();
        double var = (vals.col(c).array() - mean).square().sum() / (vals.rows() - 1);
        CHECK(std::abs(mean - 0.5) < 0.02);
        CHECK(std::abs(var - 0.64) / 0.64 < 0.03);
    }
}

TEST_CASE("linear chain moments match the closed form") {
    Dag d;
    d.num_nodes = 2;
    d.edges = {{0, 1, 1.0}};
    d.order = {0, 1};
    SemSpec spec; // identity link, sigma 1
    Rng rng(11);
    Matrix vals = gen_node_values(d, spec, 100000, rng);
    double m0 = vals.col(0).mean(), m1 = vals.col(1).mean();
    double var1 = (vals.col(1).array() - m1).square().sum() / (vals.rows() - 1);
    double cov = ((vals.col(0).array() - m0) * (vals.col(1).array() - m1)).sum() / (vals.rows() - 1);
    CHECK(std::abs(var1 - 2.0) < 0.06);
    CHECK(std::abs(cov - 1.0) < 0.05);
}

TEST_CASE("fork covariance matches (I-W)^-T Sigma (I-W)^-1") {
    // x0 -> x1, x0 -> x2, x1 -> x2 with distinct weights
    Dag d;
    d.num_nodes = 3;
    d.edges = {{0, 1, 0.7}, {0, 2, -0.4}, {1, 2, 1.2}};
    d.order = {0, 1, 2};
    SemSpec spec;
    spec.sigma = 0.9;
    Rng rng(13);
    const int n = 100000;
    Matrix vals = gen_node_values(d, spec, n, rng);

    Matrix w = Matrix::Zero(3, 3);
    for (const auto& e : d.edges) w(e.from, e.to) = e.weight;
    Matrix iw = (Matrix::Identity(3, 3) - w).inverse();
    Matrix cov_true = iw.transpose() * (0.81 * Matrix::Identity(3, 3)) * iw;

    Vector mean = vals.colwise().mean();
    Matrix centered = vals.rowwise() - mean.transpose();
    Matrix cov_emp = (centered.transpose() * centered) / (n - 1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(cov_emp(i, j) - cov_true(i, j)) /
                      std::max(0.2, std::abs(cov_true(i, j))) < 0.05);
}

TEST_CASE("sigmoid link saturates for large parent values") {
    Dag d;
    d.num_nodes = 2;
    d.edges = {{0, 1, 2.0}};
    d.order = {0, 1};
    SemSpec spec;
    spec.mu = 20.0; // parent values around 20, sigmoid ~ 1
    spec.sigma = 1.0;
    spec.link = LinkKind::Sigmoid;
    Rng rng(17);
    Matrix vals = gen_node_values(d, spec, 20000, rng);
    double child_mean = vals.col(1).mean();
    CHECK(std::abs(child_mean - (2.0 * 1.0 + 20.0)) < 0.05);
}

TEST_CASE("datasets are deterministic in the seed") {
    Dag d = toy_dag();
    SemSpec spec;
    spec.link = LinkKind::Sigmoid;
    Rng r1(42, 9), r2(42, 9);
    Dataset a = gen_data(d, spec, 500, r1);
    Dataset b = gen_data(d, spec, 500, r2);
    CHECK(a.xt == b.xt);
    CHECK(a.names == b.names);
}

TEST_CASE("add_noise_vars flags and independence") {
    Dag d = toy_dag();
    SemSpec spec;
    Rng rng(5);
    Dataset base = gen_data(d, spec, 10000, rng);
    Dataset with = add_noise_vars(base, 5, rng);
    CHECK(with.xt.cols() == base.xt.cols() + 5);
    CHECK(with.names.back() == "noise5");
    for (int j = 0; j < 5; ++j) {
        int c = base.xt.cols() + j;
        CHECK(with.noise_flags[c]);
        double my = with.xt.col(0).mean();
        double mn = with.xt.col(c).mean();
        double cov = ((with.xt.col(0).array() - my) * (with.xt.col(c).array() - mn)).sum() /
                     (with.n() - 1);
        double sy = std::sqrt((with.xt.col(0).array() - my).square().sum() / (with.n() - 1));
        double sn = std::sqrt((with.xt.col(c).array() - mn).square().sum() / (with.n() - 1));
        CHECK(std::abs(cov / (sy * sn)) < 0.05);
    }
    Dataset same = add_noise_vars(base, 0, rng);
    CHECK(same.xt == base.xt);
}

TEST_CASE("toy_dag fixture structure") {
    Dag d = toy_dag();
    CHECK(d.is_acyclic());
    d.validate();
    CHECK(d.num_nodes == 10);
    CHECK(d.target == 0);

    CHECK(d.parents(0) == std::vector<int>{2, 3});       // Pa(y) = {x2, x3}
    CHECK(d.children(0) == std::vector<int>{8});         // child x8
    CHECK(d.spouses(0) == std::vector<int>{4});          // co-parent of x8
    CHECK(d.siblings(0) == std::vector<int>{5, 6, 7});   // x5, x6, x7
    CHECK(d.degree(9) == 0);                             // x9 disconnected
    CHECK(d.name(0) == "y");
    CHECK(d.name(9) == "x9");
}

TEST_CASE("column_dag relabels the target to column zero") {
    Rng rng(21);
    Dag d = gen_dag(6, 3, rng);
    choose_target(d, rng);
    Dag cd = column_dag(d);
    CHECK(cd.target == 0);
    CHECK(cd.num_nodes == d.num_nodes);
    CHECK(cd.edges.size() == d.edges.size());
    CHECK(cd.is_acyclic());
    CHECK(cd.parents(0).size() == d.parents(d.target).size());
}

TEST_CASE("choose_target modes") {
    Rng rng(31);
    Dag d = gen_dag(8, 2, rng);
    choose_target(d, rng, false);
    CHECK(!d.parents(d.target).empty());
    choose_target(d, rng, true);
    CHECK(d.parents(d.target).empty());
}

TEST_CASE("edge list round trip") {
    Dag d = column_dag(toy_dag());
    save_edge_list("/tmp/castle_edges_test.txt", d);
    std::vector<std::string> names = d.node_names;
    Dag back = load_edge_list("/tmp/castle_edges_test.txt", names);
    CHECK(back.num_nodes == d.num_nodes);
    REQUIRE(back.edges.size() == d.edges.size());
    for (std::size_t i = 0; i < d.edges.size(); ++i) {
        CHECK(back.edges[i].from == d.edges[i].from);
        CHECK(back.edges[i].to == d.edges[i].to);
        CHECK(back.edges[i].weight == doctest::Approx(d.edges[i].weight));
    }
}

TEST_CASE("csv round trip is bit exact") {
    Dag d = toy_dag();
    SemSpec spec;
    spec.link = LinkKind::Sigmoid;
    Rng rng(77);
    Dataset ds = gen_data(d, spec, 100, rng);
    ds = add_noise_vars(ds, 2, rng);
    save_csv("/tmp/castle_roundtrip.csv", ds);
    Dataset back = load_csv("/tmp/castle_roundtrip.csv", "y");
    CHECK(back.xt == ds.xt);
    CHECK(back.names == ds.names);
    CHECK(back.noise_flags == ds.noise_flags);
}

TEST_CASE("load_csv policies") {
    {
        std::ofstream f("/tmp/castle_small.csv");
        f << "a,b,y\n1,2,3\n4,5,6\n7,8,9\n";
    }
    Dataset ds = load_csv("/tmp/castle_small.csv", "y");
    CHECK(ds.n() == 3);
    CHECK(ds.names[0] == "y");
    CHECK(ds.xt(0, 0) == 3.0);
    CHECK(ds.xt(0, 1) == 1.0);

    {
        std::ofstream f("/tmp/castle_missing.csv");
        f << "a,y\n1,2\n,4\n5,6\n";
    }
    LoadReport rep;
    Dataset dropped = load_csv("/tmp/castle_missing.csv", "y", Task::Regression, &rep);
    CHECK(dropped.n() == 2);
    CHECK(rep.dropped_rows == 1);

    {
        std::ofstream f("/tmp/castle_bad.csv");
        f << "a,y\n1,2\nfoo,4\n";
    }
    CHECK_THROWS_AS(load_csv("/tmp/castle_bad.csv", "y"), DataError);
    CHECK_THROWS_AS(load_csv("/tmp/castle_small.csv", "zz"), ArgumentError);
}
