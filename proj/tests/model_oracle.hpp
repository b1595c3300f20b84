#pragma once

// Straight-line reference for one hard-assignment coarsening layer: soft
// assignment -> argmax partition -> per-cluster products -> weighted scatter
// and pooled adjacency, all spelled out with the naive kernels from
// oracles.hpp. Shares no code with the library's layer.

#include <cmath>
#include <vector>

#include "hcgae/matrix.hpp"
#include "oracles.hpp"

namespace oracle {

struct CoarseLayerOut {
    hcgae::Matrix soft, hard, x_out, a_out;
};

// w[j], d[j]: per-cluster parameters, already restricted to the effective
// cluster count m. layer1 selects the propagated-assignment branch.
inline CoarseLayerOut coarse_layer_naive(const hcgae::Matrix& x, const hcgae::Matrix& a,
                                         const hcgae::Matrix& assign_or_proj, bool layer1,
                                         const std::vector<hcgae::Matrix>& w,
                                         const std::vector<hcgae::Matrix>& d, int m) {
    using hcgae::Matrix;
    const int n = x.rows;
    CoarseLayerOut out;

    // Soft assignment
    Matrix logits_full = layer1
        ? matmul_naive(normalize_naive(a), matmul_naive(x, assign_or_proj))
        : matmul_naive(x, assign_or_proj);
    Matrix logits(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) logits(i, j) = logits_full(i, j);
    out.soft = softmax_rows_naive(logits);

    // Hard argmax, lowest index wins ties
    out.hard = Matrix(n, m);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int j = 1; j < m; ++j)
            if (out.soft(i, j) > out.soft(i, best)) best = j;
        out.hard(i, best) = 1.0;
    }

    // Per-cluster coarsening and scatter
    const int d_out = w[0].cols;
    out.x_out = Matrix(m, d_out);
    for (int j = 0; j < m; ++j) {
        std::vector<int> members;
        for (int i = 0; i < n; ++i)
            if (out.hard(i, j) == 1.0) members.push_back(i);
        if (members.empty()) continue;  // zero row stays
        int nj = static_cast<int>(members.size());
        Matrix xj(nj, x.cols), aj(nj, nj);
        for (int r = 0; r < nj; ++r) {
            for (int c = 0; c < x.cols; ++c) xj(r, c) = x(members[r], c);
            for (int c = 0; c < nj; ++c) aj(r, c) = a(members[r], members[c]);
        }
        Matrix p = matmul_naive(normalize_naive(aj), xj);
        Matrix zj = matmul_naive(p, w[j]);
        Matrix sl = matmul_naive(p, d[j]);  // nj x 1
        // softmax over the column
        double mx = sl(0, 0);
        for (int r = 1; r < nj; ++r) mx = std::max(mx, sl(r, 0));
        double zsum = 0.0;
        std::vector<double> s(nj);
        for (int r = 0; r < nj; ++r) {
            s[r] = std::exp(sl(r, 0) - mx);
            zsum += s[r];
        }
        for (int r = 0; r < nj; ++r) s[r] /= zsum;
        for (int c = 0; c < d_out; ++c) {
            double acc = 0.0;
            for (int r = 0; r < nj; ++r) acc += s[r] * zj(r, c);
            out.x_out(j, c) = acc;
        }
    }

    // Pooled adjacency S^T A S with zeroed diagonal
    Matrix st(m, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) st(j, i) = out.hard(i, j);
    out.a_out = matmul_naive(matmul_naive(st, a), out.hard);
    for (int j = 0; j < m; ++j) out.a_out(j, j) = 0.0;
    return out;
}

}  // namespace oracle
