#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fedgrains/gnn.hpp"
#include "fedgrains/synth.hpp"
#include "oracles.hpp"

using namespace fedgrains;
using namespace fedgrains::testing;

namespace {

CsrMatrix adjacency_pattern(const Graph& g) {
    CsrMatrix a(g.num_nodes, g.num_nodes);
    a.row_ptr.assign(g.row_ptr.begin(), g.row_ptr.end());
    a.col_idx = g.col_idx;
    a.values.assign(g.col_idx.size(), 1.0);
    return a;
}

Graph path3() {
    DenseMatrix x(3, 2);
    std::vector<std::pair<int, int>> e = {{0, 1}, {1, 2}};
    return build_graph(3, e, std::move(x), {0, 1, 0}, 2);
}

}  // namespace

TEST_CASE("normalize_adjacency: isolated node, K2, and the a-b-c path") {
    CsrMatrix isolated(1, 1);
    const CsrMatrix ni = normalize_adjacency(isolated);
    REQUIRE(ni.nnz() == 1);
    CHECK(ni.values[0] == doctest::Approx(1.0));

    const Graph k2 = build_graph(2, {{{0, 1}}}, DenseMatrix(2, 1), {0, 0}, 1);
    const CsrMatrix nk = normalize_adjacency(adjacency_pattern(k2));
    REQUIRE(nk.nnz() == 4);
    for (double v : nk.values) CHECK(v == doctest::Approx(0.5));

    const CsrMatrix np = normalize_adjacency(adjacency_pattern(path3()));
    const DenseMatrix d = to_dense(np);
    CHECK(d.at(0, 0) == doctest::Approx(0.5));
    CHECK(d.at(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)));
    CHECK(d.at(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(d.at(1, 0) == doctest::Approx(1.0 / std::sqrt(6.0)));
    CHECK(d.at(2, 2) == doctest::Approx(0.5));
    CHECK(d.at(0, 2) == 0.0);
}

TEST_CASE("normalize_adjacency rejects non-square input") {
    CsrMatrix rect(2, 3);
    CHECK_THROWS_AS(normalize_adjacency(rect), std::invalid_argument);
}

TEST_CASE("forward with zero weights yields uniform logits and loss ln C") {
    Rng rng(83);
    const Graph g = random_graph(12, 0.2, 4, 6, rng);
    const CsrMatrix a = normalized_adjacency(g);
    GcnParams params;
    params.w1 = DenseMatrix(6, 8);
    params.w2 = DenseMatrix(8, 4);
    std::vector<int> mask = {0, 1, 2};
    const GcnGrad r = gcn_loss_and_grad(params, g.features, full_adjacency_sequence(a, 2),
                                        g.labels, mask);
    CHECK(r.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("forward with identity adjacency reduces to a per-node MLP") {
    Rng rng(89);
    const Graph g = random_graph(6, 0.4, 3, 5, rng);
    CsrMatrix eye(6, 6);
    for (int i = 0; i < 6; ++i) {
        eye.col_idx.push_back(i);
        eye.values.push_back(1.0);
        eye.row_ptr[i + 1] = i + 1;
    }
    const GcnParams params = init_gcn(5, 7, 3, 1);
    const GcnForward f = gcn_forward(params, g.features, full_adjacency_sequence(eye, 2));

    // reference MLP: relu(x W1) W2 row by row
    const DenseMatrix h = matmul(g.features, params.w1);
    DenseMatrix hr = h;
    for (double& v : hr.data) v = std::max(v, 0.0);
    const DenseMatrix ref = matmul(hr, params.w2);
    for (std::size_t i = 0; i < ref.data.size(); ++i)
        CHECK(f.logits.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
}

TEST_CASE("forward over the full graph equals a dense reference") {
    Rng rng(97);
    const Graph g = random_graph(8, 0.35, 3, 4, rng);
    const CsrMatrix a = normalized_adjacency(g);
    const GcnParams params = init_gcn(4, 5, 3, 2);
    const GcnForward f = gcn_forward(params, g.features, full_adjacency_sequence(a, 2));

    const DenseMatrix ad = to_dense(a);
    DenseMatrix h1 = matmul(matmul(ad, g.features), params.w1);
    for (double& v : h1.data) v = std::max(v, 0.0);
    const DenseMatrix ref = matmul(matmul(ad, h1), params.w2);
    for (std::size_t i = 0; i < ref.data.size(); ++i)
        CHECK(f.logits.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
}

TEST_CASE("gradients match central finite differences on random instances") {
    Rng rng(101);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 6 + static_cast<int>(rng.below(8));
        const Graph g = random_graph(n, 0.3, 3, 6, rng);
        const CsrMatrix a = normalized_adjacency(g);
        const AdjacencySequence seq = full_adjacency_sequence(a, 2);
        GcnParams params = init_gcn(6, 6, 3, trial);
        std::vector<int> mask;
        for (int v = 0; v < n; v += 2) mask.push_back(v);

        const GcnGrad grad = gcn_loss_and_grad(params, g.features, seq, g.labels, mask);
        auto loss_fn = [&]() {
            return gcn_loss_and_grad(params, g.features, seq, g.labels, mask).loss;
        };
        const DenseMatrix fd1 = finite_difference(params.w1, loss_fn);
        const DenseMatrix fd2 = finite_difference(params.w2, loss_fn);
        CHECK(max_rel_err(grad.gw1, fd1) < 1e-4);
        CHECK(max_rel_err(grad.gw2, fd2) < 1e-4);
    }
}

TEST_CASE("saturated correct classification has vanishing gradients") {
    // single node, no edges: logits = relu(x W1) W2; make W2 huge in the
    // correct class direction
    DenseMatrix x(1, 2);
    x.at(0, 0) = 1.0;
    Graph g = build_graph(1, {}, std::move(x), {0}, 2);
    const CsrMatrix a = normalized_adjacency(g);
    GcnParams params;
    params.w1 = DenseMatrix(2, 2);
    params.w1.at(0, 0) = 1.0;
    params.w2 = DenseMatrix(2, 2);
    params.w2.at(0, 0) = 50.0;
    params.w2.at(0, 1) = -50.0;
    std::vector<int> mask = {0};
    const GcnGrad r =
        gcn_loss_and_grad(params, g.features, full_adjacency_sequence(a, 2), g.labels, mask);
    CHECK(r.loss < 1e-8);
    for (double v : r.gw1.data) CHECK(std::abs(v) < 1e-8);
    for (double v : r.gw2.data) CHECK(std::abs(v) < 1e-8);
}

TEST_CASE("duplicated mask nodes do not change loss or gradients") {
    Rng rng(103);
    const Graph g = random_graph(10, 0.3, 3, 4, rng);
    const CsrMatrix a = normalized_adjacency(g);
    const AdjacencySequence seq = full_adjacency_sequence(a, 2);
    const GcnParams params = init_gcn(4, 5, 3, 9);
    std::vector<int> mask = {1, 3, 5};
    std::vector<int> dup = {1, 3, 5, 1, 3, 5, 5};
    const GcnGrad r1 = gcn_loss_and_grad(params, g.features, seq, g.labels, mask);
    const GcnGrad r2 = gcn_loss_and_grad(params, g.features, seq, g.labels, dup);
    CHECK(r1.loss == r2.loss);
    CHECK(r1.gw1.data == r2.gw1.data);
    CHECK(r1.gw2.data == r2.gw2.data);
}

TEST_CASE("permutation equivariance: relabeling nodes permutes logits") {
    Rng rng(107);
    const int n = 9;
    const Graph g = random_graph(n, 0.3, 3, 4, rng);
    // permutation: reverse
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = n - 1 - i;

    std::vector<std::pair<int, int>> pedges;
    for (int u = 0; u < n; ++u) {
        for (int v : g.neighbors(u)) {
            if (u < v) pedges.emplace_back(perm[u], perm[v]);
        }
    }
    DenseMatrix px(n, g.num_features());
    std::vector<int> py(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        std::copy(g.features.row(v), g.features.row(v) + g.num_features(), px.row(perm[v]));
        py[static_cast<std::size_t>(perm[v])] = g.labels[static_cast<std::size_t>(v)];
    }
    const Graph pg = build_graph(n, pedges, std::move(px), std::move(py), 3);

    const GcnParams params = init_gcn(4, 6, 3, 21);
    const GcnForward f = gcn_forward(params, g.features,
                                     full_adjacency_sequence(normalized_adjacency(g), 2));
    const GcnForward pf = gcn_forward(params, pg.features,
                                      full_adjacency_sequence(normalized_adjacency(pg), 2));
    // Relabeling reorders each row's neighbor accumulation, so equality holds
    // to summation rounding, not bitwise.
    for (int v = 0; v < n; ++v) {
        for (int j = 0; j < 3; ++j)
            CHECK(f.logits.at(v, j) ==
                  doctest::Approx(pf.logits.at(perm[v], j)).epsilon(1e-12));
    }
}

TEST_CASE("evaluate: degenerate masks and the constant-label classifier") {
    Rng rng(109);
    const Graph g = random_graph(20, 0.2, 4, 3, rng);
    const CsrMatrix a = normalized_adjacency(g);

    // constant predictor: W1 = 0, W2 = 0 except bias-like column via relu(0)=0
    // => all logits zero => argmax = class 0
    GcnParams zero;
    zero.w1 = DenseMatrix(3, 4);
    zero.w2 = DenseMatrix(4, 4);
    std::vector<int> all(20);
    for (int i = 0; i < 20; ++i) all[i] = i;
    const EvalResult r = gcn_evaluate(zero, g.features, a, g.labels, all);
    int zeros = 0;
    for (int y : g.labels) zeros += y == 0;
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(zeros) / 20.0));

    std::vector<int> one = {7};
    const EvalResult r1 = gcn_evaluate(zero, g.features, a, g.labels, one);
    CHECK((r1.accuracy == 0.0 || r1.accuracy == 1.0));

    CHECK_THROWS_AS(gcn_evaluate(zero, g.features, a, g.labels, {}), std::invalid_argument);
}

TEST_CASE("untrained accuracy on many random labels is near 1/C") {
    // glorot-initialized net on random labels: expectation 1/C
    Rng rng(113);
    const int n = 600;
    const Graph g = random_graph(n, 0.01, 5, 4, rng);
    const CsrMatrix a = normalized_adjacency(g);
    const GcnParams params = init_gcn(4, 8, 5, 33);
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    const EvalResult r = gcn_evaluate(params, g.features, a, g.labels, all);
    CHECK(r.accuracy > 0.08);
    CHECK(r.accuracy < 0.35);
}

TEST_CASE("checkpoint round-trip") {
    namespace fs = std::filesystem;
    const fs::path file = fs::temp_directory_path() / "fedgrains_model.bin";
    const GcnParams params = init_gcn(5, 4, 3, 55);
    save_gcn(params, file);
    const GcnParams back = load_gcn(file);
    CHECK(back.w1.data == params.w1.data);
    CHECK(back.w2.data == params.w2.data);
    CHECK(back.w2.rows == 4);
    CHECK(back.w2.cols == 3);
    fs::remove(file);
}
