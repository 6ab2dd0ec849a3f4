#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "fedgrains/graph.hpp"
#include "fedgrains/numerics.hpp"

namespace fedgrains {

// Two-layer graph convolution, no biases, no dropout: ReLU hidden layer,
// linear output. Also reused as the sampler policy network (output width 1).
struct GcnParams {
    DenseMatrix w1;  // in_dim x hidden
    DenseMatrix w2;  // hidden x out_dim
};

// Glorot-uniform initialization, one derived stream per layer.
GcnParams init_gcn(int in_dim, int hidden, int out_dim, std::uint64_t seed);

// Symmetric normalization with self-loops: entry (u,v) of A+I becomes
// 1/sqrt((deg u + 1)(deg v + 1)). Input must be square with a symmetric
// pattern and no stored self-loops.
CsrMatrix normalize_adjacency(const CsrMatrix& sub);
CsrMatrix normalized_adjacency(const Graph& g);

// Submatrix of `a` with the given row/column node lists (strictly
// increasing). Values are copied, not renormalized, so a saturated sampled
// sequence reproduces the full-graph computation exactly.
CsrMatrix restrict_adjacency(const CsrMatrix& a, std::span<const int> rows,
                             std::span<const int> cols);

// One aggregation step: `mat` maps in_nodes activations to out_nodes.
struct LayerAdjacency {
    CsrMatrix mat;
    std::vector<int> out_nodes;
    std::vector<int> in_nodes;
};

// Per-layer aggregation chain, applied input-side first. Layer l's out_nodes
// must equal layer l+1's in_nodes.
struct AdjacencySequence {
    std::vector<LayerAdjacency> layers;

    const std::vector<int>& input_nodes() const { return layers.front().in_nodes; }
    const std::vector<int>& output_nodes() const { return layers.back().out_nodes; }
};

// Full-neighborhood sequence: every layer aggregates over the whole graph.
AdjacencySequence full_adjacency_sequence(const CsrMatrix& a_norm, int num_layers);

struct GcnForward {
    DenseMatrix logits;  // |output_nodes| x out_dim
    DenseMatrix z1;      // pre-activation of the hidden layer
    DenseMatrix x_in;    // gathered input features
};

GcnForward gcn_forward(const GcnParams& params, const DenseMatrix& features,
                       const AdjacencySequence& adj);

struct GcnGrad {
    double loss = 0.0;
    DenseMatrix gw1;
    DenseMatrix gw2;
};

// Backprop of an arbitrary dL/dlogits through both layers (adjacency treated
// as constant).
GcnGrad gcn_backward(const GcnParams& params, const AdjacencySequence& adj,
                     const GcnForward& fwd, const DenseMatrix& dlogits);

// Masked mean cross-entropy and its exact parameter gradients. `labels` is
// indexed by node id; `mask_nodes` lists node ids among adj.output_nodes().
GcnGrad gcn_loss_and_grad(const GcnParams& params, const DenseMatrix& features,
                          const AdjacencySequence& adj, std::span<const int> labels,
                          std::span<const int> mask_nodes);

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

// Accuracy/loss over a node mask with full (unsampled) neighborhoods.
EvalResult gcn_evaluate(const GcnParams& params, const DenseMatrix& features,
                        const CsrMatrix& a_norm, std::span<const int> labels,
                        std::span<const int> mask_nodes);

// Checkpoint: shape header + row-major little-endian doubles.
void save_gcn(const GcnParams& params, const std::filesystem::path& file);
GcnParams load_gcn(const std::filesystem::path& file);

}  // namespace fedgrains
