#pragma once

#include <cstdint>
#include <string>

#include "fedgrains/graph.hpp"

namespace fedgrains {

// Planted hierarchical-community graph generator. Leaves are grouped in
// pairs and pairs in quads, with edge density falling off with hierarchy
// distance, so a good edge-cut partitioner recovers the hierarchy at
// 5/10/20-way granularity. Node labels follow leaf communities with some
// mixing; features are noisy class centroids plus a leaf offset.
struct SynthConfig {
    int num_nodes = 160;
    int num_classes = 3;
    int feature_dim = 24;
    int num_leaves = 8;               // multiple of 4 (pairs and quads)
    long long total_edges = 750;
    long long pair_edges = 6;         // between partner leaves, per pair
    long long quad_cross_edges = 3;   // between non-partner leaves in a quad, per pair
    long long far_edges = 12;         // across quads, total
    double density_spread = 0.3;      // intra-leaf density step by leaf index mod 4
    double triangle_fraction = 0.4;   // intra-leaf edges closed into triangles
    double label_mix = 0.10;          // nodes carrying another class (features follow)
    double label_flip = 0.04;         // mislabeled nodes (features keep true class)
    double class_scale = 1.0;
    double leaf_scale = 0.35;
    double feature_noise = 0.45;  // per-entry noise std
};

// Presets sized like the citation benchmarks: "cora" (2485 nodes, 10138
// edges, 7 classes), "citeseer" (2120/7358/6), "tiny" for fast tests.
SynthConfig synth_preset(const std::string& name);

Graph make_synth(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace fedgrains
