#include "fedgrains/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedgrains {

bool Graph::has_edge(int u, int v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

Graph build_graph(int num_nodes, std::span<const std::pair<int, int>> edges,
                  DenseMatrix features, std::vector<int> labels, int num_classes) {
    if (num_nodes < 0) throw std::invalid_argument("build_graph: negative node count");
    if (features.rows != num_nodes)
        throw std::invalid_argument("build_graph: feature row count != num_nodes");
    if (static_cast<int>(labels.size()) != num_nodes)
        throw std::invalid_argument("build_graph: label count != num_nodes");
    for (int y : labels) {
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("build_graph: label out of range [0, num_classes)");
    }

    std::vector<std::pair<int, int>> sym;
    sym.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
            throw std::invalid_argument("build_graph: edge endpoint out of range");
        if (u == v) continue;  // raw lists may carry self-citations
        sym.emplace_back(u, v);
        sym.emplace_back(v, u);
    }
    std::sort(sym.begin(), sym.end());
    sym.erase(std::unique(sym.begin(), sym.end()), sym.end());

    Graph g;
    g.num_nodes = num_nodes;
    g.num_classes = num_classes;
    g.features = std::move(features);
    g.labels = std::move(labels);
    g.row_ptr.assign(num_nodes + 1, 0);
    for (const auto& [u, v] : sym) g.row_ptr[u + 1]++;
    for (int i = 0; i < num_nodes; ++i) g.row_ptr[i + 1] += g.row_ptr[i];
    g.col_idx.resize(sym.size());
    for (std::size_t p = 0; p < sym.size(); ++p) g.col_idx[p] = sym[p].second;
    return g;
}

ClientDataset induced_subgraph(const Graph& g, std::span<const int> nodes) {
    if (nodes.empty()) throw std::invalid_argument("induced_subgraph: empty node set");
    std::vector<int> ids(nodes.begin(), nodes.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (int v : ids) {
        if (v < 0 || v >= g.num_nodes)
            throw std::invalid_argument("induced_subgraph: node id out of range");
    }

    std::vector<int> local(g.num_nodes, -1);
    for (std::size_t i = 0; i < ids.size(); ++i) local[ids[i]] = static_cast<int>(i);

    const int n = static_cast<int>(ids.size());
    ClientDataset out;
    out.global_ids = ids;
    out.graph.num_nodes = n;
    out.graph.num_classes = g.num_classes;
    out.graph.features = DenseMatrix(n, g.num_features());
    out.graph.labels.resize(n);
    out.graph.row_ptr.assign(n + 1, 0);

    for (int i = 0; i < n; ++i) {
        const int gv = ids[static_cast<std::size_t>(i)];
        std::copy(g.features.row(gv), g.features.row(gv) + g.num_features(),
                  out.graph.features.row(i));
        out.graph.labels[i] = g.labels[gv];
        for (int u : g.neighbors(gv)) {
            if (local[u] >= 0) out.graph.row_ptr[i + 1]++;
        }
    }
    for (int i = 0; i < n; ++i) out.graph.row_ptr[i + 1] += out.graph.row_ptr[i];
    out.graph.col_idx.resize(static_cast<std::size_t>(out.graph.row_ptr[n]));
    std::vector<int> cursor(out.graph.row_ptr.begin(), out.graph.row_ptr.end() - 1);
    for (int i = 0; i < n; ++i) {
        for (int u : g.neighbors(ids[static_cast<std::size_t>(i)])) {
            if (local[u] >= 0) out.graph.col_idx[cursor[i]++] = local[u];
        }
    }
    // Global neighbor lists are sorted and relabeling is monotone, so local
    // lists come out sorted as well.
    return out;
}

SplitMask make_splits(const Graph& g, double train_ratio, double val_ratio, double test_ratio,
                      std::uint64_t seed) {
    if (g.num_nodes < 3) throw std::invalid_argument("make_splits: fewer than 3 nodes");
    if (train_ratio <= 0 || val_ratio <= 0 || test_ratio <= 0)
        throw std::invalid_argument("make_splits: ratios must be positive");
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw std::invalid_argument("make_splits: ratios must sum to 1");

    const int n = g.num_nodes;
    const double ratios[3] = {train_ratio, val_ratio, test_ratio};
    int sizes[3];
    double rem[3];
    int assigned = 0;
    for (int s = 0; s < 3; ++s) {
        const double exact = ratios[s] * n;
        sizes[s] = static_cast<int>(std::floor(exact));
        rem[s] = exact - sizes[s];
        assigned += sizes[s];
    }
    // Largest remainder; remainder ties go to the earlier split.
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) {
        if (rem[a] != rem[b]) return rem[a] > rem[b];
        return a < b;
    });
    for (int i = 0; assigned < n; ++i, ++assigned) sizes[order[i % 3]]++;
    // Keep every split nonempty: steal from the largest (ties to the later
    // split, so train/val are favored).
    for (int s = 0; s < 3; ++s) {
        while (sizes[s] == 0) {
            int big = 0;
            for (int t = 1; t < 3; ++t) {
                if (sizes[t] >= sizes[big]) big = t;
            }
            sizes[big]--;
            sizes[s]++;
        }
    }

    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng rng(derive_seed(seed, {seed_tag::splits}));
    rng.shuffle(perm);

    SplitMask mask;
    mask.train.assign(perm.begin(), perm.begin() + sizes[0]);
    mask.val.assign(perm.begin() + sizes[0], perm.begin() + sizes[0] + sizes[1]);
    mask.test.assign(perm.begin() + sizes[0] + sizes[1], perm.end());
    std::sort(mask.train.begin(), mask.train.end());
    std::sort(mask.val.begin(), mask.val.end());
    std::sort(mask.test.begin(), mask.test.end());
    return mask;
}

double clustering_coefficient(const Graph& g) {
    if (g.num_nodes == 0) return 0.0;
    double total = 0.0;
    for (int v = 0; v < g.num_nodes; ++v) {
        const int d = g.degree(v);
        if (d < 2) continue;
        const auto nb = g.neighbors(v);
        long long tri = 0;
        for (int i = 0; i < d; ++i) {
            for (int j = i + 1; j < d; ++j) {
                if (g.has_edge(nb[i], nb[j])) tri++;
            }
        }
        total += 2.0 * static_cast<double>(tri) / (static_cast<double>(d) * (d - 1));
    }
    return total / static_cast<double>(g.num_nodes);
}

}  // namespace fedgrains
