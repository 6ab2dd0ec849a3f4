#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedgrains/graph.hpp"

namespace fedgrains {

struct Partition {
    std::vector<int> assignment;  // node -> part id in [0, num_parts)
    int num_parts = 0;
};

enum class ScenarioKind { disjoint, overlapping };

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::disjoint;
    int num_parts = 5;
    int samples_per_part = 5;   // overlapping only
    double sample_fraction = 0.5;
    std::uint64_t seed = 0;
};

// Weighted working graph used across coarsening levels. Node weights count
// original nodes; edge weights accumulate parallel edges under contraction.
struct WeightedGraph {
    int num_nodes = 0;
    std::vector<int> row_ptr;
    std::vector<int> col_idx;
    std::vector<long long> edge_weight;
    std::vector<long long> node_weight;

    int degree(int v) const { return row_ptr[v + 1] - row_ptr[v]; }
};

struct CoarsenResult {
    WeightedGraph coarse;
    std::vector<int> projection;  // fine node -> coarse node
    bool fixed_point = false;     // nothing contracted
};

WeightedGraph to_weighted(const Graph& g);

// One heavy-edge matching pass: nodes visited in random order, each unmatched
// node matched to its unmatched neighbor of maximal edge weight. Supernodes
// heavier than max_node_weight are never formed (0 disables the cap).
CoarsenResult coarsen(const WeightedGraph& g, Rng& rng, long long max_node_weight = 0);
CoarsenResult coarsen(const Graph& g, std::uint64_t seed);

// Weighted edge cut of an assignment.
long long edge_cut(const WeightedGraph& g, std::span<const int> assignment);
long long edge_cut(const Graph& g, std::span<const int> assignment);

// Multilevel edge-cut partitioner: coarsen to max(30p, 200) nodes, greedy
// graph growing, then boundary Kernighan-Lin style refinement on every level
// during projection. Deterministic for a fixed seed. Max part size stays
// within (1+eps) * ceil(N/p) nodes.
Partition partition_multilevel(const Graph& g, int num_parts, std::uint64_t seed,
                               double balance_eps = 0.05);

// Boundary refinement passes on an existing assignment: moves a node to the
// part that minimizes the cut subject to the balance cap. The cut never
// increases.
void refine_assignment(const Graph& g, std::vector<int>& assignment, int num_parts,
                       std::uint64_t seed, double balance_eps = 0.05);

struct SplitRatios {
    double train = 0.2;
    double val = 0.4;
    double test = 0.4;
};

std::vector<ClientDataset> build_disjoint(const Graph& g, int num_parts, std::uint64_t seed,
                                          const SplitRatios& ratios);

std::vector<ClientDataset> build_overlapping(const Graph& g, int num_parts, int samples_per_part,
                                             double fraction, std::uint64_t seed,
                                             const SplitRatios& ratios);

// Dispatch on the scenario kind. Disjoint yields num_parts clients,
// overlapping num_parts * samples_per_part.
std::vector<ClientDataset> build_scenario(const Graph& g, const ScenarioSpec& spec,
                                          const SplitRatios& ratios);

// Edges of g whose endpoints never co-occur in any client.
long long count_missing_links(const Graph& g, std::span<const ClientDataset> clients);

// Median base-2 Jensen-Shannon divergence of per-client label distributions
// over all unordered client pairs.
double label_heterogeneity(std::span<const ClientDataset> clients);

// Mean Hellinger distance of per-client degree distributions (padded to the
// shared support {0..max degree}) over all unordered client pairs.
double degree_heterogeneity(std::span<const ClientDataset> clients);

// Pairwise metrics on explicit distributions, exposed for property tests.
double js_divergence_base2(std::span<const double> p, std::span<const double> q);
double hellinger_distance(std::span<const double> p, std::span<const double> q);

}  // namespace fedgrains
