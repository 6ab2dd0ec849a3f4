#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fedgrains/graph.hpp"
#include "fedgrains/numerics.hpp"

namespace fedgrains::testing {

// Central finite differences of f over every entry of `params`.
inline DenseMatrix finite_difference(DenseMatrix& params, const std::function<double()>& f,
                                     double h = 1e-5) {
    DenseMatrix grad(params.rows, params.cols);
    for (std::size_t i = 0; i < params.data.size(); ++i) {
        const double saved = params.data[i];
        params.data[i] = saved + h;
        const double fp = f();
        params.data[i] = saved - h;
        const double fm = f();
        params.data[i] = saved;
        grad.data[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

// Worst relative error between two gradients, floored so noise on near-zero
// entries does not dominate.
inline double max_rel_err(const DenseMatrix& a, const DenseMatrix& b, double floor = 1e-3) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double denom = std::max({std::abs(a.data[i]), std::abs(b.data[i]), floor});
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]) / denom);
    }
    return worst;
}

// Dense reference multiply for spmm checks.
inline DenseMatrix to_dense(const CsrMatrix& a) {
    DenseMatrix d(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) d.at(i, a.col_idx[p]) = a.values[p];
    }
    return d;
}

// O(N * max_deg^2) triangle-based clustering coefficient.
inline double brute_force_clustering(const Graph& g) {
    double total = 0.0;
    for (int v = 0; v < g.num_nodes; ++v) {
        const auto nb = g.neighbors(v);
        const int d = static_cast<int>(nb.size());
        if (d < 2) continue;
        int tri = 0;
        for (int i = 0; i < d; ++i) {
            for (int j = i + 1; j < d; ++j) {
                for (int w : g.neighbors(nb[i])) {
                    if (w == nb[j]) {
                        tri++;
                        break;
                    }
                }
            }
        }
        total += 2.0 * tri / (static_cast<double>(d) * (d - 1));
    }
    return g.num_nodes ? total / g.num_nodes : 0.0;
}

// Uniform random graph for property tests.
inline Graph random_graph(int n, double edge_prob, int num_classes, int dim, Rng& rng) {
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (rng.uniform01() < edge_prob) edges.emplace_back(u, v);
        }
    }
    DenseMatrix x(n, dim);
    for (double& e : x.data) e = 2.0 * rng.uniform01() - 1.0;
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(num_classes));
    return build_graph(n, edges, std::move(x), std::move(y), num_classes);
}

}  // namespace fedgrains::testing
