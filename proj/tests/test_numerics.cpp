#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fedgrains/numerics.hpp"
#include "oracles.hpp"

using namespace fedgrains;
using namespace fedgrains::testing;

namespace {

CsrMatrix random_sparse(int rows, int cols, double density, Rng& rng) {
    CsrMatrix a(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (rng.uniform01() < density) {
                a.col_idx.push_back(j);
                a.values.push_back(2.0 * rng.uniform01() - 1.0);
            }
        }
        a.row_ptr[i + 1] = static_cast<int>(a.col_idx.size());
    }
    return a;
}

DenseMatrix random_dense(int rows, int cols, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (double& x : m.data) x = 2.0 * rng.uniform01() - 1.0;
    return m;
}

}  // namespace

TEST_CASE("spmm: identity and zero") {
    Rng rng(3);
    const DenseMatrix b = random_dense(5, 4, rng);

    CsrMatrix eye(5, 5);
    for (int i = 0; i < 5; ++i) {
        eye.col_idx.push_back(i);
        eye.values.push_back(1.0);
        eye.row_ptr[i + 1] = i + 1;
    }
    const DenseMatrix ib = spmm(eye, b);
    CHECK(ib.data == b.data);

    const CsrMatrix zero(5, 5);
    const DenseMatrix zb = spmm(zero, b);
    for (double x : zb.data) CHECK(x == 0.0);
}

TEST_CASE("spmm matches a dense reference on random matrices") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const CsrMatrix a = random_sparse(6, 6, 0.3, rng);
        const DenseMatrix b = random_dense(6, 4, rng);
        const DenseMatrix got = spmm(a, b);
        const DenseMatrix ref = matmul(to_dense(a), b);
        for (std::size_t i = 0; i < got.data.size(); ++i)
            CHECK(got.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));

        const DenseMatrix got_t = spmm_transposed(a, b);
        DenseMatrix at(6, 6);
        const DenseMatrix ad = to_dense(a);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) at.at(i, j) = ad.at(j, i);
        const DenseMatrix ref_t = matmul(at, b);
        for (std::size_t i = 0; i < got_t.data.size(); ++i)
            CHECK(got_t.data[i] == doctest::Approx(ref_t.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("softmax_xent: uniform logits give ln C") {
    DenseMatrix logits(3, 7);
    std::vector<int> labels = {0, 3, 6};
    std::vector<int> mask = {0, 1, 2};
    const auto r = softmax_xent(logits, labels, mask);
    CHECK(r.loss == doctest::Approx(std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("softmax_xent: saturated correct logits drive the loss to zero") {
    DenseMatrix logits(2, 3);
    logits.at(0, 1) = 200.0;
    logits.at(1, 2) = 200.0;
    std::vector<int> labels = {1, 2};
    std::vector<int> mask = {0, 1};
    const auto r = softmax_xent(logits, labels, mask);
    CHECK(r.loss < 1e-12);
    for (double g : r.grad.data) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("softmax_xent: loss is shift invariant and the gradient matches finite differences") {
    Rng rng(23);
    DenseMatrix logits = random_dense(5, 3, rng);
    std::vector<int> labels(5);
    for (auto& y : labels) y = static_cast<int>(rng.below(3));
    std::vector<int> mask = {0, 2, 4};

    const auto base = softmax_xent(logits, labels, mask);
    DenseMatrix shifted = logits;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) shifted.at(i, j) += 17.5;
    const auto sh = softmax_xent(shifted, labels, mask);
    CHECK(std::abs(base.loss - sh.loss) < 1e-10);

    const DenseMatrix fd = finite_difference(
        logits, [&]() { return softmax_xent(logits, labels, mask).loss; });
    CHECK(max_rel_err(base.grad, fd) < 1e-6);

    // rows outside the mask carry no gradient
    for (int j = 0; j < 3; ++j) {
        CHECK(base.grad.at(1, j) == 0.0);
        CHECK(base.grad.at(3, j) == 0.0);
    }
}

TEST_CASE("softmax_xent rejects an empty mask") {
    DenseMatrix logits(2, 2);
    std::vector<int> labels = {0, 1};
    CHECK_THROWS_AS(softmax_xent(logits, labels, {}), std::invalid_argument);
}

TEST_CASE("adam: zero gradients leave parameters untouched") {
    DenseMatrix p(2, 2);
    p.at(0, 0) = 1.5;
    const DenseMatrix g(2, 2);
    AdamState st(2, 2);
    adam_step(p, g, st, 0.01);
    CHECK(p.at(0, 0) == 1.5);
    CHECK(st.step == 1);
}

TEST_CASE("adam: first step has the closed form lr*g/(|g|+eps)") {
    DenseMatrix p(1, 3);
    DenseMatrix g(1, 3);
    g.at(0, 0) = 0.3;
    g.at(0, 1) = -2.0;
    g.at(0, 2) = 1e-3;
    AdamState st(1, 3);
    const double lr = 0.01;
    adam_step(p, g, st, lr);
    for (int j = 0; j < 3; ++j) {
        const double expected = -lr * g.at(0, j) / (std::abs(g.at(0, j)) + st.eps);
        CHECK(p.at(0, j) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("adam: lr = 0 leaves params but advances moments") {
    DenseMatrix p(1, 1);
    DenseMatrix g(1, 1);
    g.at(0, 0) = 1.0;
    AdamState st(1, 1);
    adam_step(p, g, st, 0.0);
    CHECK(p.at(0, 0) == 0.0);
    CHECK(st.m.at(0, 0) != 0.0);
    CHECK(st.v.at(0, 0) != 0.0);
    CHECK(st.step == 1);
}

TEST_CASE("top_k basics and tie breaking") {
    const std::vector<double> scores = {3.0, 1.0, 2.0};
    CHECK(top_k(scores, 2) == std::vector<int>{0, 2});
    CHECK(top_k(scores, 0).empty());
    CHECK(top_k(scores, 5) == std::vector<int>{0, 1, 2});

    const std::vector<double> ties = {1.0, 1.0, 1.0};
    CHECK(top_k(ties, 2) == std::vector<int>{0, 1});
}

TEST_CASE("gumbel-perturbed top-1 matches categorical probabilities") {
    // P(argmax_i log w_i + G_i = j) = w_j / sum w
    const std::vector<double> w = {0.5, 1.0, 2.0, 4.0};
    const double wsum = 7.5;
    Rng rng(99);
    const int trials = 100000;
    std::vector<int> counts(w.size(), 0);
    std::vector<double> scores(w.size());
    for (int t = 0; t < trials; ++t) {
        for (std::size_t i = 0; i < w.size(); ++i) scores[i] = std::log(w[i]) + rng.gumbel();
        counts[static_cast<std::size_t>(top_k(scores, 1)[0])]++;
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double p = w[i] / wsum;
        const double se = std::sqrt(p * (1 - p) * trials);
        CHECK(std::abs(counts[i] - p * trials) <= 3.0 * se);
    }
}
