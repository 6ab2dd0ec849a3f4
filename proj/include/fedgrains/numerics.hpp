#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedgrains/rng.hpp"

namespace fedgrains {

// Row-major dense matrix of 64-bit reals. 64-bit everywhere: the test suite
// leans on central finite differences, which are meaningless in float.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Compressed-row sparse matrix. Column indices sorted ascending within a row.
struct CsrMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr;   // size rows+1
    std::vector<int> col_idx;   // size nnz
    std::vector<double> values; // size nnz

    CsrMatrix() = default;
    CsrMatrix(int r, int c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

    std::size_t nnz() const { return col_idx.size(); }
};

// c = a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// c = a^T * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
// c = a * b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& b);
// c = a^T * b without materializing the transpose.
DenseMatrix spmm_transposed(const CsrMatrix& a, const DenseMatrix& b);

struct SoftmaxXentResult {
    double loss = 0.0;
    DenseMatrix grad;  // same shape as logits; rows outside the mask are zero
};

// Mean cross-entropy over the masked rows, log-sum-exp stabilized.
// `labels[i]` is the class of logits row i; `mask` lists the row indices that
// contribute. Throws std::invalid_argument on an empty mask.
SoftmaxXentResult softmax_xent(const DenseMatrix& logits, std::span<const int> labels,
                               std::span<const int> mask);

struct AdamState {
    DenseMatrix m;
    DenseMatrix v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(int rows, int cols) : m(rows, cols), v(rows, cols) {}
};

// Bias-corrected Adam update in place.
void adam_step(DenseMatrix& params, const DenseMatrix& grad, AdamState& state, double lr);

// Indices of the k largest scores (all indices if k >= n), ties broken by the
// lower index. Returned ascending.
std::vector<int> top_k(std::span<const double> scores, int k);

}  // namespace fedgrains
