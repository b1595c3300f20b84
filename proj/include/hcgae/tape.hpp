#pragma once

// Reverse-mode automatic differentiation over dense matrices. A Tape records
// every operation as a node; backward() runs the chain rule in reverse
// creation order (which is a valid topological order because inputs must
// exist before the ops that consume them).
//
// Parameters enter as leaf() nodes, fixed data as constant() nodes. Gradients
// are only propagated through subgraphs that reach a leaf.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcgae/matrix.hpp"

namespace hcgae {

using NodeId = int;

enum class OpKind {
    Leaf,
    Constant,
    Add,
    Sub,
    Scale,
    Hadamard,
    MatMul,
    Transpose,
    Relu,
    RowSoftmax,
    Square,
    SumAll,
    SliceRows,
    SliceCols,
    VStack,
    NormalizeAdjacency,
    BceWithLogitsMean,
};

class Tape {
public:
    NodeId leaf(Matrix v) { return push(OpKind::Leaf, {}, std::move(v), true); }
    NodeId constant(Matrix v) { return push(OpKind::Constant, {}, std::move(v), false); }

    NodeId add(NodeId a, NodeId b) { return push(OpKind::Add, {a, b}, hcgae::add(val(a), val(b))); }
    NodeId sub(NodeId a, NodeId b) { return push(OpKind::Sub, {a, b}, hcgae::sub(val(a), val(b))); }

    NodeId scale(NodeId a, double c) {
        NodeId id = push(OpKind::Scale, {a}, hcgae::scale(val(a), c));
        nodes_[id].scalar = c;
        return id;
    }

    NodeId hadamard(NodeId a, NodeId b) {
        return push(OpKind::Hadamard, {a, b}, hcgae::hadamard(val(a), val(b)));
    }

    NodeId matmul(NodeId a, NodeId b) {
        return push(OpKind::MatMul, {a, b}, hcgae::matmul(val(a), val(b)));
    }

    NodeId transpose(NodeId a) { return push(OpKind::Transpose, {a}, hcgae::transpose(val(a))); }

    NodeId relu(NodeId a) { return push(OpKind::Relu, {a}, hcgae::relu(val(a))); }

    NodeId row_softmax(NodeId a) {
        return push(OpKind::RowSoftmax, {a}, hcgae::row_softmax(val(a)));
    }

    NodeId square(NodeId a) { return push(OpKind::Square, {a}, hcgae::hadamard(val(a), val(a))); }

    NodeId sum_all(NodeId a) {
        Matrix out(1, 1);
        out(0, 0) = hcgae::sum(val(a));
        return push(OpKind::SumAll, {a}, std::move(out));
    }

    // Rows of a at the given indices, in the given order.
    NodeId slice_rows(NodeId a, std::vector<int> indices) {
        const Matrix& v = val(a);
        Matrix out(static_cast<int>(indices.size()), v.cols);
        for (int i = 0; i < out.rows; ++i) {
            int src = indices[static_cast<std::size_t>(i)];
            if (src < 0 || src >= v.rows)
                throw std::out_of_range("slice_rows: index " + std::to_string(src) +
                                        " out of range for " + v.shape_str());
            for (int j = 0; j < v.cols; ++j) out(i, j) = v(src, j);
        }
        NodeId id = push(OpKind::SliceRows, {a}, std::move(out));
        nodes_[id].indices = std::move(indices);
        return id;
    }

    // Leading keep columns of a.
    NodeId slice_cols(NodeId a, int keep) {
        const Matrix& v = val(a);
        if (keep < 0 || keep > v.cols)
            throw std::out_of_range("slice_cols: keep " + std::to_string(keep) +
                                    " out of range for " + v.shape_str());
        Matrix out(v.rows, keep);
        for (int i = 0; i < v.rows; ++i)
            for (int j = 0; j < keep; ++j) out(i, j) = v(i, j);
        return push(OpKind::SliceCols, {a}, std::move(out));
    }

    // Stack inputs vertically; all must share a column count.
    NodeId vstack(const std::vector<NodeId>& parts) {
        if (parts.empty()) throw std::invalid_argument("vstack: no inputs");
        int cols = val(parts[0]).cols, rows = 0;
        for (NodeId p : parts) {
            if (val(p).cols != cols) throw std::invalid_argument("vstack: column mismatch");
            rows += val(p).rows;
        }
        Matrix out(rows, cols);
        std::vector<int> offsets;
        offsets.reserve(parts.size());
        int at = 0;
        for (NodeId p : parts) {
            const Matrix& v = val(p);
            offsets.push_back(at);
            for (int i = 0; i < v.rows; ++i)
                for (int j = 0; j < cols; ++j) out(at + i, j) = v(i, j);
            at += v.rows;
        }
        NodeId id = push(OpKind::VStack, parts, std::move(out));
        nodes_[id].indices = std::move(offsets);
        return id;
    }

    // Symmetric degree normalization with self-loops, differentiable in the
    // adjacency. Saves the A+I row sums for the backward rule.
    NodeId normalize_adjacency(NodeId a) {
        std::vector<double> deg;
        Matrix out = detail::normalize_adjacency_impl(val(a), &deg);
        NodeId id = push(OpKind::NormalizeAdjacency, {a}, std::move(out));
        nodes_[id].degrees = std::move(deg);
        return id;
    }

    // Mean binary cross-entropy from logits against fixed 0/1 targets,
    // computed in the numerically stable max/log1p form.
    NodeId bce_with_logits_mean(NodeId logits, Matrix targets) {
        const Matrix& z = val(logits);
        if (!z.same_shape(targets))
            throw std::invalid_argument("bce_with_logits_mean: shape mismatch (" + z.shape_str() +
                                        " vs " + targets.shape_str() + ")");
        if (z.empty()) throw std::invalid_argument("bce_with_logits_mean: empty input");
        double total = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            double zi = z.data[i], ti = targets.data[i];
            total += std::max(zi, 0.0) - zi * ti + std::log1p(std::exp(-std::abs(zi)));
        }
        Matrix out(1, 1);
        out(0, 0) = total / static_cast<double>(z.size());
        NodeId id = push(OpKind::BceWithLogitsMean, {logits}, std::move(out));
        nodes_[id].aux = std::move(targets);
        return id;
    }

    const Matrix& value(NodeId id) const { return at(id).value; }
    bool requires_grad(NodeId id) const { return at(id).requires_grad; }

    // Gradient of the last backward() root with respect to node id. Zero
    // matrix if the node was never touched.
    const Matrix& grad(NodeId id) const {
        const Node& n = at(id);
        if (n.grad.rows != n.value.rows || n.grad.cols != n.value.cols) {
            // Lazily materialize an all-zero gradient for untouched nodes.
            const_cast<Node&>(n).grad = Matrix(n.value.rows, n.value.cols);
        }
        return n.grad;
    }

    std::size_t node_count() const { return nodes_.size(); }

    void zero_grad() {
        for (Node& n : nodes_) n.grad = Matrix();
    }

    // Reverse sweep from root (must be 1x1). Each call computes a fresh pass
    // and adds its result into the stored gradients, so repeated calls
    // accumulate until zero_grad().
    void backward(NodeId root) {
        Node& r = at(root);
        if (r.value.rows != 1 || r.value.cols != 1)
            throw std::invalid_argument("backward: root must be 1x1, got " + r.value.shape_str());
        if (!r.requires_grad) return;  // nothing reaches a leaf
        std::vector<Matrix> scratch(static_cast<std::size_t>(root) + 1);
        scratch[static_cast<std::size_t>(root)] = Matrix{{1.0}};
        for (NodeId id = root; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (!n.requires_grad || scratch[static_cast<std::size_t>(id)].empty()) continue;
            propagate(n, scratch[static_cast<std::size_t>(id)], scratch);
        }
        for (NodeId id = 0; id <= root; ++id) {
            Matrix& s = scratch[static_cast<std::size_t>(id)];
            if (s.empty()) continue;
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (n.grad.empty()) n.grad = std::move(s);
            else
                for (std::size_t i = 0; i < s.size(); ++i) n.grad.data[i] += s.data[i];
        }
    }

private:
    struct Node {
        OpKind op;
        std::vector<NodeId> inputs;
        Matrix value;
        Matrix grad;  // empty until touched by backward
        bool requires_grad = false;
        double scalar = 0.0;           // Scale
        std::vector<int> indices;      // SliceRows sources / VStack offsets / SliceCols keep
        std::vector<double> degrees;   // NormalizeAdjacency row sums of A+I
        Matrix aux;                    // BceWithLogitsMean targets
    };

    std::vector<Node> nodes_;

    Node& at(NodeId id) {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
            throw std::out_of_range("tape: bad node id " + std::to_string(id));
        return nodes_[static_cast<std::size_t>(id)];
    }
    const Node& at(NodeId id) const { return const_cast<Tape*>(this)->at(id); }

    const Matrix& val(NodeId id) { return at(id).value; }

    NodeId push(OpKind op, std::vector<NodeId> inputs, Matrix value, bool force_grad = false) {
        check_finite(value, "tape forward");
        Node n;
        n.op = op;
        n.requires_grad = force_grad;
        for (NodeId in : inputs)
            if (at(in).requires_grad) n.requires_grad = true;
        n.inputs = std::move(inputs);
        n.value = std::move(value);
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    void accumulate(NodeId id, const Matrix& g, std::vector<Matrix>& scratch) {
        Node& n = at(id);
        if (!n.requires_grad) return;
        Matrix& s = scratch[static_cast<std::size_t>(id)];
        if (s.empty()) s = Matrix(n.value.rows, n.value.cols);
        for (std::size_t i = 0; i < g.size(); ++i) s.data[i] += g.data[i];
    }

    void propagate(Node& n, const Matrix& g, std::vector<Matrix>& scratch) {
        switch (n.op) {
            case OpKind::Leaf:
            case OpKind::Constant:
                break;
            case OpKind::Add:
                accumulate(n.inputs[0], g, scratch);
                accumulate(n.inputs[1], g, scratch);
                break;
            case OpKind::Sub:
                accumulate(n.inputs[0], g, scratch);
                accumulate(n.inputs[1], hcgae::scale(g, -1.0), scratch);
                break;
            case OpKind::Scale:
                accumulate(n.inputs[0], hcgae::scale(g, n.scalar), scratch);
                break;
            case OpKind::Hadamard:
                accumulate(n.inputs[0], hcgae::hadamard(g, at(n.inputs[1]).value), scratch);
                accumulate(n.inputs[1], hcgae::hadamard(g, at(n.inputs[0]).value), scratch);
                break;
            case OpKind::MatMul: {
                const Matrix& a = at(n.inputs[0]).value;
                const Matrix& b = at(n.inputs[1]).value;
                if (at(n.inputs[0]).requires_grad)
                    accumulate(n.inputs[0], hcgae::matmul(g, hcgae::transpose(b)), scratch);
                if (at(n.inputs[1]).requires_grad)
                    accumulate(n.inputs[1], hcgae::matmul(hcgae::transpose(a), g), scratch);
                break;
            }
            case OpKind::Transpose:
                accumulate(n.inputs[0], hcgae::transpose(g), scratch);
                break;
            case OpKind::Relu: {
                const Matrix& x = at(n.inputs[0]).value;
                Matrix dx = g;
                for (std::size_t i = 0; i < dx.size(); ++i)
                    if (x.data[i] <= 0.0) dx.data[i] = 0.0;
                accumulate(n.inputs[0], dx, scratch);
                break;
            }
            case OpKind::RowSoftmax: {
                // dx_i = y_i * (g_i - <g_i, y_i>) per row.
                const Matrix& y = n.value;
                Matrix dx(y.rows, y.cols);
                for (int i = 0; i < y.rows; ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < y.cols; ++j) dot += g(i, j) * y(i, j);
                    for (int j = 0; j < y.cols; ++j) dx(i, j) = y(i, j) * (g(i, j) - dot);
                }
                accumulate(n.inputs[0], dx, scratch);
                break;
            }
            case OpKind::Square: {
                const Matrix& x = at(n.inputs[0]).value;
                Matrix dx = hcgae::hadamard(g, x);
                accumulate(n.inputs[0], hcgae::scale(dx, 2.0), scratch);
                break;
            }
            case OpKind::SumAll: {
                const Matrix& x = at(n.inputs[0]).value;
                accumulate(n.inputs[0], Matrix::filled(x.rows, x.cols, g(0, 0)), scratch);
                break;
            }
            case OpKind::SliceRows: {
                const Matrix& x = at(n.inputs[0]).value;
                Matrix dx(x.rows, x.cols);
                for (int i = 0; i < n.value.rows; ++i) {
                    int dst = n.indices[static_cast<std::size_t>(i)];
                    for (int j = 0; j < x.cols; ++j) dx(dst, j) += g(i, j);
                }
                accumulate(n.inputs[0], dx, scratch);
                break;
            }
            case OpKind::SliceCols: {
                const Matrix& x = at(n.inputs[0]).value;
                Matrix dx(x.rows, x.cols);
                for (int i = 0; i < n.value.rows; ++i)
                    for (int j = 0; j < n.value.cols; ++j) dx(i, j) = g(i, j);
                accumulate(n.inputs[0], dx, scratch);
                break;
            }
            case OpKind::VStack: {
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    const Matrix& part = at(n.inputs[k]).value;
                    if (!at(n.inputs[k]).requires_grad) continue;
                    Matrix gk(part.rows, part.cols);
                    int off = n.indices[k];
                    for (int i = 0; i < part.rows; ++i)
                        for (int j = 0; j < part.cols; ++j) gk(i, j) = g(off + i, j);
                    accumulate(n.inputs[k], gk, scratch);
                }
                break;
            }
            case OpKind::NormalizeAdjacency: {
                // N_ij = (A+I)_ij r_i r_j with d = rowsum(A+I), r = d^-1/2.
                // A_kl enters N_kl directly and enters d_k (row sums only,
                // so not d_l), giving
                //   dA_kl = G_kl r_k r_l - 1/2 d_k^-3/2 (t_k + u_k)
                // where t_k = sum_j G_kj (A+I)_kj r_j collects d_k's effect
                // through row k of N and u_k = sum_i G_ik (A+I)_ik r_i
                // through column k.
                const Matrix& a = at(n.inputs[0]).value;
                const int nn = a.rows;
                std::vector<double> r(static_cast<std::size_t>(nn));
                for (int i = 0; i < nn; ++i) r[static_cast<std::size_t>(i)] =
                    1.0 / std::sqrt(n.degrees[static_cast<std::size_t>(i)]);
                std::vector<double> t(static_cast<std::size_t>(nn), 0.0),
                    u(static_cast<std::size_t>(nn), 0.0);
                for (int i = 0; i < nn; ++i)
                    for (int j = 0; j < nn; ++j) {
                        double atilde = a(i, j) + (i == j ? 1.0 : 0.0);
                        t[static_cast<std::size_t>(i)] += g(i, j) * atilde * r[static_cast<std::size_t>(j)];
                        u[static_cast<std::size_t>(j)] += g(i, j) * atilde * r[static_cast<std::size_t>(i)];
                    }
                Matrix dx(nn, nn);
                for (int k = 0; k < nn; ++k) {
                    double dk = n.degrees[static_cast<std::size_t>(k)];
                    double coef_k = 0.5 * std::pow(dk, -1.5) *
                                    (t[static_cast<std::size_t>(k)] + u[static_cast<std::size_t>(k)]);
                    for (int l = 0; l < nn; ++l)
                        dx(k, l) = g(k, l) * r[static_cast<std::size_t>(k)] * r[static_cast<std::size_t>(l)] -
                                   coef_k;
                }
                accumulate(n.inputs[0], dx, scratch);
                break;
            }
            case OpKind::BceWithLogitsMean: {
                const Matrix& z = at(n.inputs[0]).value;
                const Matrix& tgt = n.aux;
                double gg = g(0, 0) / static_cast<double>(z.size());
                Matrix dz(z.rows, z.cols);
                for (std::size_t i = 0; i < z.size(); ++i) {
                    double sig = 1.0 / (1.0 + std::exp(-z.data[i]));
                    dz.data[i] = (sig - tgt.data[i]) * gg;
                }
                accumulate(n.inputs[0], dz, scratch);
                break;
            }
        }
    }
};

}  // namespace hcgae
