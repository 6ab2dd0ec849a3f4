#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fedgrains/numerics.hpp"

namespace fedgrains {

// Immutable undirected graph with node features and labels. The adjacency is
// stored CSR-symmetric: u in neighbors(v) iff v in neighbors(u), neighbor
// lists sorted ascending, no self-loops, no duplicates. Construction is
// single-threaded; instances are safe to share across threads afterwards.
struct Graph {
    int num_nodes = 0;
    int num_classes = 0;
    std::vector<int> row_ptr;  // size num_nodes+1
    std::vector<int> col_idx;
    DenseMatrix features;      // num_nodes x num_features
    std::vector<int> labels;   // size num_nodes, each in [0, num_classes)

    int num_features() const { return features.cols; }
    int degree(int v) const { return row_ptr[v + 1] - row_ptr[v]; }
    std::span<const int> neighbors(int v) const {
        return {col_idx.data() + row_ptr[v], static_cast<std::size_t>(degree(v))};
    }
    bool has_edge(int u, int v) const;
    // Undirected edge count.
    long long num_edges() const { return static_cast<long long>(col_idx.size()) / 2; }
};

// Symmetrizes the edge list, drops self-loops and duplicates, validates
// feature/label shapes. Throws std::invalid_argument on malformed input.
Graph build_graph(int num_nodes, std::span<const std::pair<int, int>> edges,
                  DenseMatrix features, std::vector<int> labels, int num_classes);

struct SplitMask {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;

    bool empty() const { return train.empty() && val.empty() && test.empty(); }
};

struct ClientDataset {
    Graph graph;
    std::vector<int> global_ids;  // local id -> global id, strictly increasing
    SplitMask splits;
};

// Induced subgraph on `nodes` (any order, deduplicated internally); keeps
// exactly the edges with both endpoints in the set. Splits are left empty.
ClientDataset induced_subgraph(const Graph& g, std::span<const int> nodes);

// Uniform random disjoint assignment with largest-remainder rounding, so set
// sizes differ from the exact ratios by less than one node (every split is
// kept nonempty). Deterministic for a fixed seed.
SplitMask make_splits(const Graph& g, double train_ratio, double val_ratio, double test_ratio,
                      std::uint64_t seed);

// Mean over all nodes of the local clustering coefficient, 0 for deg < 2.
double clustering_coefficient(const Graph& g);

}  // namespace fedgrains
