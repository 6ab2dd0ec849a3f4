#include "fedgrains/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedgrains {

namespace {
void check(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check(a.cols == b.rows, "matmul: shape mismatch");
    DenseMatrix c(a.rows, b.cols);
    const int n = b.cols;
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    check(a.rows == b.rows, "matmul_tn: shape mismatch");
    DenseMatrix c(a.cols, b.cols);
    const int n = b.cols;
    for (int k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.row(i);
            for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    check(a.cols == b.cols, "matmul_nt: shape mismatch");
    DenseMatrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            crow[j] = s;
        }
    }
    return c;
}

DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& b) {
    check(a.cols == b.rows, "spmm: shape mismatch");
    DenseMatrix c(a.rows, b.cols);
    const int n = b.cols;
    for (int i = 0; i < a.rows; ++i) {
        double* crow = c.row(i);
        for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            const double w = a.values[p];
            const double* brow = b.row(a.col_idx[p]);
            for (int j = 0; j < n; ++j) crow[j] += w * brow[j];
        }
    }
    return c;
}

DenseMatrix spmm_transposed(const CsrMatrix& a, const DenseMatrix& b) {
    check(a.rows == b.rows, "spmm_transposed: shape mismatch");
    DenseMatrix c(a.cols, b.cols);
    const int n = b.cols;
    for (int i = 0; i < a.rows; ++i) {
        const double* brow = b.row(i);
        for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            const double w = a.values[p];
            double* crow = c.row(a.col_idx[p]);
            for (int j = 0; j < n; ++j) crow[j] += w * brow[j];
        }
    }
    return c;
}

SoftmaxXentResult softmax_xent(const DenseMatrix& logits, std::span<const int> labels,
                               std::span<const int> mask) {
    check(!mask.empty(), "softmax_xent: empty mask");
    check(labels.size() == static_cast<std::size_t>(logits.rows),
          "softmax_xent: label count must match logits rows");

    SoftmaxXentResult out;
    out.grad = DenseMatrix(logits.rows, logits.cols);
    const double inv_m = 1.0 / static_cast<double>(mask.size());
    double loss = 0.0;
    for (int r : mask) {
        check(r >= 0 && r < logits.rows, "softmax_xent: mask row out of range");
        const int label = labels[static_cast<std::size_t>(r)];
        check(label >= 0 && label < logits.cols, "softmax_xent: label out of range");
        const double* lrow = logits.row(r);
        double mx = lrow[0];
        for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, lrow[j]);
        double sum = 0.0;
        for (int j = 0; j < logits.cols; ++j) sum += std::exp(lrow[j] - mx);
        const double lse = mx + std::log(sum);
        loss += lse - lrow[label];
        double* grow = out.grad.row(r);
        for (int j = 0; j < logits.cols; ++j) {
            grow[j] = std::exp(lrow[j] - lse) * inv_m;
        }
        grow[label] -= inv_m;
    }
    out.loss = loss * inv_m;
    return out;
}

void adam_step(DenseMatrix& params, const DenseMatrix& grad, AdamState& state, double lr) {
    check(params.same_shape(grad), "adam_step: grad shape mismatch");
    check(params.same_shape(state.m) && params.same_shape(state.v),
          "adam_step: state shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const std::size_t n = params.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad.data[i];
        state.m.data[i] = state.beta1 * state.m.data[i] + (1.0 - state.beta1) * g;
        state.v.data[i] = state.beta2 * state.v.data[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m.data[i] / bc1;
        const double vhat = state.v.data[i] / bc2;
        params.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

std::vector<int> top_k(std::span<const double> scores, int k) {
    const int n = static_cast<int>(scores.size());
    if (k < 0) k = 0;
    if (k > n) k = n;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
            return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
        return a < b;
    });
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace fedgrains
