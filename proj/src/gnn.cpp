#include "fedgrains/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fedgrains {

GcnParams init_gcn(int in_dim, int hidden, int out_dim, std::uint64_t seed) {
    GcnParams p;
    p.w1 = DenseMatrix(in_dim, hidden);
    p.w2 = DenseMatrix(hidden, out_dim);
    int layer = 0;
    for (DenseMatrix* w : {&p.w1, &p.w2}) {
        Rng rng(derive_seed(seed, {seed_tag::init_gnn, static_cast<std::uint64_t>(layer++)}));
        const double limit = std::sqrt(6.0 / (w->rows + w->cols));
        for (double& x : w->data) x = (2.0 * rng.uniform01() - 1.0) * limit;
    }
    return p;
}

CsrMatrix normalize_adjacency(const CsrMatrix& sub) {
    if (sub.rows != sub.cols) throw std::invalid_argument("normalize_adjacency: non-square input");
    const int n = sub.rows;
    std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        const int deg = sub.row_ptr[v + 1] - sub.row_ptr[v];
        inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(deg) + 1.0);
    }
    CsrMatrix out(n, n);
    out.col_idx.reserve(sub.nnz() + static_cast<std::size_t>(n));
    out.values.reserve(sub.nnz() + static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        bool self_done = false;
        for (int p = sub.row_ptr[v]; p < sub.row_ptr[v + 1]; ++p) {
            const int u = sub.col_idx[p];
            if (!self_done && u > v) {
                out.col_idx.push_back(v);
                out.values.push_back(inv_sqrt[v] * inv_sqrt[v]);
                self_done = true;
            }
            out.col_idx.push_back(u);
            out.values.push_back(inv_sqrt[v] * inv_sqrt[u]);
        }
        if (!self_done) {
            out.col_idx.push_back(v);
            out.values.push_back(inv_sqrt[v] * inv_sqrt[v]);
        }
        out.row_ptr[v + 1] = static_cast<int>(out.col_idx.size());
    }
    return out;
}

CsrMatrix normalized_adjacency(const Graph& g) {
    CsrMatrix a(g.num_nodes, g.num_nodes);
    a.row_ptr.assign(g.row_ptr.begin(), g.row_ptr.end());
    a.col_idx = g.col_idx;
    a.values.assign(g.col_idx.size(), 1.0);
    return normalize_adjacency(a);
}

CsrMatrix restrict_adjacency(const CsrMatrix& a, std::span<const int> rows,
                             std::span<const int> cols) {
    std::vector<int> col_pos(static_cast<std::size_t>(a.cols), -1);
    for (std::size_t i = 0; i < cols.size(); ++i) col_pos[cols[i]] = static_cast<int>(i);

    CsrMatrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int v = rows[r];
        for (int p = a.row_ptr[v]; p < a.row_ptr[v + 1]; ++p) {
            const int cp = col_pos[a.col_idx[p]];
            if (cp >= 0) {
                out.col_idx.push_back(cp);
                out.values.push_back(a.values[p]);
            }
        }
        out.row_ptr[r + 1] = static_cast<int>(out.col_idx.size());
    }
    return out;
}

AdjacencySequence full_adjacency_sequence(const CsrMatrix& a_norm, int num_layers) {
    std::vector<int> all(static_cast<std::size_t>(a_norm.rows));
    for (int i = 0; i < a_norm.rows; ++i) all[static_cast<std::size_t>(i)] = i;
    AdjacencySequence seq;
    seq.layers.resize(static_cast<std::size_t>(num_layers));
    for (auto& layer : seq.layers) {
        layer.mat = a_norm;
        layer.out_nodes = all;
        layer.in_nodes = all;
    }
    return seq;
}

namespace {

DenseMatrix gather_rows(const DenseMatrix& x, std::span<const int> nodes) {
    DenseMatrix out(static_cast<int>(nodes.size()), x.cols);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        std::memcpy(out.row(static_cast<int>(i)), x.row(nodes[i]),
                    static_cast<std::size_t>(x.cols) * sizeof(double));
    }
    return out;
}

}  // namespace

GcnForward gcn_forward(const GcnParams& params, const DenseMatrix& features,
                       const AdjacencySequence& adj) {
    if (adj.layers.size() != 2) throw std::invalid_argument("gcn_forward: expected 2 layers");
    GcnForward f;
    f.x_in = gather_rows(features, adj.input_nodes());
    f.z1 = spmm(adj.layers[0].mat, matmul(f.x_in, params.w1));
    DenseMatrix h1 = f.z1;
    for (double& x : h1.data) x = std::max(x, 0.0);
    f.logits = matmul(spmm(adj.layers[1].mat, h1), params.w2);
    return f;
}

GcnGrad gcn_backward(const GcnParams& params, const AdjacencySequence& adj,
                     const GcnForward& fwd, const DenseMatrix& dlogits) {
    DenseMatrix h1 = fwd.z1;
    for (double& x : h1.data) x = std::max(x, 0.0);
    const DenseMatrix p = spmm(adj.layers[1].mat, h1);

    GcnGrad g;
    g.gw2 = matmul_tn(p, dlogits);
    DenseMatrix dh1 = spmm_transposed(adj.layers[1].mat, matmul_nt(dlogits, params.w2));
    for (std::size_t i = 0; i < dh1.data.size(); ++i) {
        if (fwd.z1.data[i] <= 0.0) dh1.data[i] = 0.0;
    }
    g.gw1 = matmul_tn(fwd.x_in, spmm_transposed(adj.layers[0].mat, dh1));
    return g;
}

GcnGrad gcn_loss_and_grad(const GcnParams& params, const DenseMatrix& features,
                          const AdjacencySequence& adj, std::span<const int> labels,
                          std::span<const int> mask_nodes) {
    if (mask_nodes.empty()) throw std::invalid_argument("gcn_loss_and_grad: empty mask");
    const GcnForward fwd = gcn_forward(params, features, adj);

    const auto& out_nodes = adj.output_nodes();
    std::vector<int> row_labels(out_nodes.size());
    std::vector<int> node_row(static_cast<std::size_t>(features.rows), -1);
    for (std::size_t r = 0; r < out_nodes.size(); ++r) {
        row_labels[r] = labels[static_cast<std::size_t>(out_nodes[r])];
        node_row[static_cast<std::size_t>(out_nodes[r])] = static_cast<int>(r);
    }
    std::vector<int> mask_rows;
    mask_rows.reserve(mask_nodes.size());
    for (int v : mask_nodes) {
        const int r = node_row[static_cast<std::size_t>(v)];
        if (r < 0) throw std::invalid_argument("gcn_loss_and_grad: mask node not an output node");
        mask_rows.push_back(r);
    }
    std::sort(mask_rows.begin(), mask_rows.end());
    mask_rows.erase(std::unique(mask_rows.begin(), mask_rows.end()), mask_rows.end());

    const SoftmaxXentResult xent = softmax_xent(fwd.logits, row_labels, mask_rows);
    GcnGrad g = gcn_backward(params, adj, fwd, xent.grad);
    g.loss = xent.loss;
    return g;
}

EvalResult gcn_evaluate(const GcnParams& params, const DenseMatrix& features,
                        const CsrMatrix& a_norm, std::span<const int> labels,
                        std::span<const int> mask_nodes) {
    if (mask_nodes.empty()) throw std::invalid_argument("gcn_evaluate: empty mask");
    const AdjacencySequence seq = full_adjacency_sequence(a_norm, 2);
    const GcnForward fwd = gcn_forward(params, features, seq);

    std::vector<int> mask(mask_nodes.begin(), mask_nodes.end());
    std::sort(mask.begin(), mask.end());
    mask.erase(std::unique(mask.begin(), mask.end()), mask.end());

    int correct = 0;
    for (int v : mask) {
        const double* row = fwd.logits.row(v);
        int arg = 0;
        for (int j = 1; j < fwd.logits.cols; ++j) {
            if (row[j] > row[arg]) arg = j;
        }
        if (arg == labels[static_cast<std::size_t>(v)]) correct++;
    }
    const SoftmaxXentResult xent = softmax_xent(fwd.logits, labels, mask);
    return {static_cast<double>(correct) / static_cast<double>(mask.size()), xent.loss};
}

namespace {
constexpr std::uint32_t kCheckpointMagic = 0x4647524Eu;  // "FGRN"

void write_tensor(std::ofstream& out, const DenseMatrix& m) {
    const std::uint32_t shape[2] = {static_cast<std::uint32_t>(m.rows),
                                    static_cast<std::uint32_t>(m.cols)};
    out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

DenseMatrix read_tensor(std::ifstream& in) {
    std::uint32_t shape[2];
    in.read(reinterpret_cast<char*>(shape), sizeof(shape));
    if (!in) throw std::runtime_error("checkpoint: truncated header");
    DenseMatrix m(static_cast<int>(shape[0]), static_cast<int>(shape[1]));
    in.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor data");
    return m;
}
}  // namespace

void save_gcn(const GcnParams& params, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + file.string());
    const std::uint32_t header[2] = {kCheckpointMagic, 2};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    write_tensor(out, params.w1);
    write_tensor(out, params.w2);
}

GcnParams load_gcn(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + file.string());
    std::uint32_t header[2];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] != kCheckpointMagic || header[1] != 2)
        throw std::runtime_error("checkpoint: bad header in " + file.string());
    GcnParams p;
    p.w1 = read_tensor(in);
    p.w2 = read_tensor(in);
    return p;
}

}  // namespace fedgrains
