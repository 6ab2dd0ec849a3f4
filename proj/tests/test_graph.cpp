#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fedgrains/dataset_io.hpp"
#include "fedgrains/graph.hpp"
#include "fedgrains/synth.hpp"
#include "oracles.hpp"

using namespace fedgrains;
using namespace fedgrains::testing;

namespace {

Graph tiny_graph(std::vector<std::pair<int, int>> edges, int n, int classes = 2) {
    DenseMatrix x(n, 2);
    for (int i = 0; i < n; ++i) x.at(i, 0) = i;
    std::vector<int> y(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % classes;
    return build_graph(n, edges, std::move(x), std::move(y), classes);
}

}  // namespace

TEST_CASE("build_graph symmetrizes, deduplicates, and drops self-loops") {
    const Graph g = tiny_graph({{0, 1}, {1, 0}, {0, 1}, {2, 2}}, 3);
    CHECK(g.num_edges() == 1);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 0));
    CHECK(!g.has_edge(2, 2));
    CHECK(g.degree(2) == 0);
}

TEST_CASE("build_graph validates labels and shapes") {
    DenseMatrix x(2, 1);
    CHECK_THROWS_AS(build_graph(2, {}, DenseMatrix(3, 1), {0, 0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_graph(2, {}, DenseMatrix(2, 1), {0, 5}, 2), std::invalid_argument);
    std::vector<std::pair<int, int>> bad = {{0, 7}};
    CHECK_THROWS_AS(build_graph(2, bad, DenseMatrix(2, 1), {0, 0}, 2), std::invalid_argument);
}

TEST_CASE("adjacency symmetry is an involution on random graphs") {
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const Graph g = random_graph(60, 0.08, 3, 4, rng);
        for (int u = 0; u < g.num_nodes; ++u) {
            for (int v : g.neighbors(u)) CHECK(g.has_edge(v, u));
        }
    }
}

TEST_CASE("induced_subgraph keeps exactly the internal edges") {
    // triangle a-b-c, take {a, b}
    const Graph g = tiny_graph({{0, 1}, {1, 2}, {0, 2}}, 3);
    const ClientDataset c = induced_subgraph(g, std::vector<int>{0, 1});
    CHECK(c.graph.num_nodes == 2);
    CHECK(c.graph.num_edges() == 1);
    CHECK(c.global_ids == std::vector<int>{0, 1});
    CHECK(c.splits.empty());
}

TEST_CASE("induced_subgraph on the full node set is an identity relabeling") {
    Rng rng(37);
    const Graph g = random_graph(40, 0.1, 3, 4, rng);
    std::vector<int> all(40);
    for (int i = 0; i < 40; ++i) all[i] = i;
    const ClientDataset c = induced_subgraph(g, all);
    CHECK(c.graph.num_edges() == g.num_edges());
    CHECK(c.graph.col_idx == g.col_idx);
    CHECK(c.graph.features.data == g.features.data);
    CHECK(c.global_ids == all);
}

TEST_CASE("induced_subgraph rejects out-of-range ids") {
    const Graph g = tiny_graph({{0, 1}}, 2);
    CHECK_THROWS_AS(induced_subgraph(g, std::vector<int>{0, 5}), std::invalid_argument);
    CHECK_THROWS_AS(induced_subgraph(g, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("make_splits: exact ratios, determinism, disjointness") {
    Rng rng(41);
    const Graph g = random_graph(100, 0.05, 3, 4, rng);
    const SplitMask a = make_splits(g, 0.2, 0.4, 0.4, 7);
    const SplitMask b = make_splits(g, 0.2, 0.4, 0.4, 7);
    CHECK(a.train.size() == 20);
    CHECK(a.val.size() == 40);
    CHECK(a.test.size() == 40);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);

    std::vector<int> all;
    all.insert(all.end(), a.train.begin(), a.train.end());
    all.insert(all.end(), a.val.begin(), a.val.end());
    all.insert(all.end(), a.test.begin(), a.test.end());
    std::sort(all.begin(), all.end());
    CHECK(all.size() == 100);
    CHECK(std::unique(all.begin(), all.end()) == all.end());
}

TEST_CASE("make_splits largest-remainder rounding keeps every split nonempty") {
    Rng rng(43);
    const Graph g = random_graph(10, 0.2, 2, 3, rng);
    const SplitMask m = make_splits(g, 0.05, 0.475, 0.475, 3);
    // floors are (0,4,4); remainders give val/test one more each; the empty
    // train split then steals one node from the largest split.
    CHECK(m.train.size() == 1);
    const auto sizes = std::pair<std::size_t, std::size_t>(m.val.size(), m.test.size());
    const bool ok = (sizes == std::pair<std::size_t, std::size_t>(5, 4)) ||
                    (sizes == std::pair<std::size_t, std::size_t>(4, 5));
    CHECK(ok);
}

TEST_CASE("make_splits rejects tiny graphs and bad ratios") {
    Rng rng(47);
    const Graph g2 = random_graph(2, 0.5, 2, 2, rng);
    CHECK_THROWS_AS(make_splits(g2, 0.2, 0.4, 0.4, 1), std::invalid_argument);
    const Graph g10 = random_graph(10, 0.3, 2, 2, rng);
    CHECK_THROWS_AS(make_splits(g10, 0.5, 0.4, 0.4, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_splits(g10, -0.2, 0.6, 0.6, 1), std::invalid_argument);
}

TEST_CASE("clustering coefficient: triangle, star, and brute-force parity") {
    const Graph k3 = tiny_graph({{0, 1}, {1, 2}, {0, 2}}, 3);
    CHECK(clustering_coefficient(k3) == doctest::Approx(1.0));

    const Graph star = tiny_graph({{0, 1}, {0, 2}, {0, 3}, {0, 4}}, 5);
    CHECK(clustering_coefficient(star) == doctest::Approx(0.0));

    Rng rng(53);
    for (int trial = 0; trial < 4; ++trial) {
        const Graph g = random_graph(150, 0.05, 3, 2, rng);
        const double got = clustering_coefficient(g);
        CHECK(got == doctest::Approx(brute_force_clustering(g)).epsilon(1e-12));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("dataset round-trips through the on-disk format") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fedgrains_io_test";
    fs::remove_all(dir);

    const Graph g = make_synth(synth_preset("tiny"), 5);
    save_dataset(g, dir);
    const Graph back = load_dataset(dir);
    CHECK(back.num_nodes == g.num_nodes);
    CHECK(back.num_classes == g.num_classes);
    CHECK(back.col_idx == g.col_idx);
    CHECK(back.row_ptr == g.row_ptr);
    CHECK(back.labels == g.labels);
    CHECK(back.features.data == g.features.data);
    fs::remove_all(dir);
}

TEST_CASE("load_dataset accepts 32-bit feature storage") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fedgrains_io_f32";
    fs::remove_all(dir);

    const Graph g = make_synth(synth_preset("tiny"), 6);
    save_dataset(g, dir);
    std::vector<float> narrow(g.features.data.begin(), g.features.data.end());
    fs::remove(dir / "features.f64");
    std::ofstream(dir / "features.f32", std::ios::binary)
        .write(reinterpret_cast<const char*>(narrow.data()),
               static_cast<std::streamsize>(narrow.size() * sizeof(float)));

    const Graph back = load_dataset(dir);
    CHECK(back.col_idx == g.col_idx);
    for (std::size_t i = 0; i < g.features.data.size(); ++i) {
        CHECK(back.features.data[i] ==
              doctest::Approx(g.features.data[i]).epsilon(1e-6));
    }
    fs::remove_all(dir);
}

TEST_CASE("load_dataset flags malformed directories") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fedgrains_io_bad";
    fs::remove_all(dir);
    fs::create_directories(dir);
    CHECK_THROWS_AS(load_dataset(dir), DataError);  // missing meta.json

    std::ofstream(dir / "meta.json") << R"({"num_nodes":2,"num_features":1,"num_classes":1})";
    std::ofstream(dir / "features.f64", std::ios::binary).write("\0\0\0\0\0\0\0\0", 8);
    // feature bytes cover one node instead of two
    CHECK_THROWS_AS(load_dataset(dir), DataError);
    fs::remove_all(dir);
}

TEST_CASE("planetoid ingestion maps ids, symmetrizes, and sorts label names") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fedgrains_ingest";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream content(dir / "toy.content");
        content << "paperB 1 0 theory\n";
        content << "paperA 0 1 systems\n";
        content << "paperC 1 1 theory\n";
        std::ofstream cites(dir / "toy.cites");
        cites << "paperA paperB\n";
        cites << "paperB paperA\n";   // reverse duplicate collapses
        cites << "paperC paperC\n";   // self-citation dropped
        cites << "paperX paperA\n";   // unknown id skipped
    }
    const Graph g = ingest_planetoid(dir / "toy.content", dir / "toy.cites");
    CHECK(g.num_nodes == 3);
    CHECK(g.num_classes == 2);
    CHECK(g.num_edges() == 1);
    // sorted label names: systems=0, theory=1; node order follows .content
    CHECK(g.labels == std::vector<int>{1, 0, 1});
    CHECK(g.has_edge(0, 1));
    fs::remove_all(dir);
}

TEST_CASE("synthetic cora preset matches the published scale") {
    const Graph g = make_synth(synth_preset("cora"), 1);
    CHECK(g.num_nodes == 2485);
    CHECK(g.num_edges() == 10138);
    CHECK(g.num_classes == 7);
}
