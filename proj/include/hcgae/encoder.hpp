#pragma once

// Hierarchical encoder. Each layer assigns nodes to clusters, hardens the
// assignment to a partition, coarsens every induced subgraph to a single node
// (message passing never crosses subgraph boundaries), and assembles the next
// smaller graph. The soft-pooling variant skips hardening and pools the whole
// graph with the soft assignment instead; its adjacency chain then stays
// differentiable.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "hcgae/graph.hpp"
#include "hcgae/matrix.hpp"
#include "hcgae/params.hpp"
#include "hcgae/tape.hpp"

namespace hcgae {

// Row-wise argmax to one-hot; ties break to the lowest column index.
inline Matrix harden_assignment(const Matrix& soft) {
    if (soft.rows == 0 || soft.cols == 0)
        throw std::invalid_argument("harden_assignment: empty input");
    Matrix hard(soft.rows, soft.cols);
    for (int i = 0; i < soft.rows; ++i) {
        int best = 0;
        for (int j = 1; j < soft.cols; ++j)
            if (soft(i, j) > soft(i, best)) best = j;
        hard(i, best) = 1.0;
    }
    return hard;
}

struct SubgraphView {
    std::vector<int> nodes;  // parent indices, strictly increasing
    Matrix x;                // |V_j| x d slice of the parent features
    Matrix a;                // induced adjacency
};

// Splits a graph along a one-hot assignment. Cluster j's view holds exactly
// the nodes with hard[i,j] = 1; empty clusters yield empty views.
inline std::vector<SubgraphView> extract_subgraphs(const Matrix& x, const Matrix& a,
                                                   const Matrix& hard) {
    if (hard.rows != x.rows || hard.rows != a.rows)
        throw std::invalid_argument("extract_subgraphs: row mismatch");
    std::vector<SubgraphView> views(static_cast<std::size_t>(hard.cols));
    for (int i = 0; i < hard.rows; ++i)
        for (int j = 0; j < hard.cols; ++j)
            if (hard(i, j) == 1.0) views[static_cast<std::size_t>(j)].nodes.push_back(i);
    for (SubgraphView& view : views) {
        int m = static_cast<int>(view.nodes.size());
        view.x = Matrix(m, x.cols);
        view.a = Matrix(m, m);
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < x.cols; ++c) view.x(r, c) = x(view.nodes[static_cast<std::size_t>(r)], c);
            for (int c = 0; c < m; ++c)
                view.a(r, c) = a(view.nodes[static_cast<std::size_t>(r)],
                                 view.nodes[static_cast<std::size_t>(c)]);
        }
    }
    return views;
}

struct CoarsenOut {
    NodeId z = -1;      // |V_j| x d_out embeddings
    NodeId s_row = -1;  // 1 x |V_j| mapping weights (softmax over members)
};

// One subgraph's coarsening: Z_j = A_hat_j (X_j W_j) and the mapping
// distribution s_j = softmax(A_hat_j X_j D_j), computed on the tape. The
// induced adjacency enters in normalized self-loop form.
inline CoarsenOut coarsen_subgraph(Tape& tape, NodeId x_j, const Matrix& a_j, NodeId w_j,
                                   NodeId d_j) {
    CoarsenOut out;
    NodeId ahat = tape.constant(normalize_adjacency(a_j));
    NodeId propagated = tape.matmul(ahat, x_j);
    out.z = tape.matmul(propagated, w_j);
    NodeId logits = tape.matmul(propagated, d_j);  // |V_j| x 1
    out.s_row = tape.row_softmax(tape.transpose(logits));
    return out;
}

struct EncoderLayer {
    int n_in = 0;             // node count entering the layer
    int n_out = 0;            // effective cluster count (clamped)
    NodeId x_in = -1;         // layer input features on the tape (pre-dropout)
    Matrix a_in;              // layer input adjacency value
    NodeId a_in_node = -1;    // soft variant: adjacency on the tape
    NodeId soft_node = -1;
    Matrix soft;              // soft assignment value
    Matrix hard;              // one-hot partition (hard variant only)
    std::vector<SubgraphView> subgraphs;  // hard variant only
    std::vector<NodeId> z_nodes;          // per-cluster Z_j; -1 for empty clusters
    std::vector<NodeId> s_nodes;          // per-cluster mapping rows; -1 for empty
    NodeId x_out = -1;
    Matrix a_out;             // coarsened adjacency value
    NodeId a_out_node = -1;   // soft variant
};

struct EncoderCache {
    std::vector<EncoderLayer> layers;
    std::vector<int> size_chain;  // node counts n_0..n_L after clamping
    NodeId x_final = -1;
    Matrix a_final;
    NodeId a_final_node = -1;     // soft variant
};

namespace detail {

// Inverted dropout on a tape node; no-op when rate is 0 or rng is absent.
inline NodeId apply_dropout(Tape& tape, NodeId x, double rate, Rng* rng) {
    if (rate <= 0.0 || rng == nullptr) return x;
    const Matrix& v = tape.value(x);
    Matrix mask(v.rows, v.cols);
    double keep = 1.0 - rate;
    for (double& m : mask.data) m = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    return tape.hadamard(x, tape.constant(std::move(mask)));
}

// One propagation block: steps of A_hat (H W); ReLU between steps and, when
// relu_last, on the output.
inline NodeId run_gnn_block(Tape& tape, NodeId ahat, NodeId x,
                            const std::vector<NodeId>& weights, bool relu_last) {
    NodeId h = x;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        h = tape.matmul(ahat, tape.matmul(h, weights[i]));
        if (i + 1 < weights.size() || relu_last) h = tape.relu(h);
    }
    return h;
}

inline Matrix zero_diagonal(Matrix m) {
    for (int i = 0; i < std::min(m.rows, m.cols); ++i) m(i, i) = 0.0;
    return m;
}

}  // namespace detail

// Per-layer parameter handles registered on one tape.
struct TapeParams {
    struct EncLayer {
        std::vector<NodeId> assignment;
        NodeId projection = -1;
        std::vector<NodeId> cluster_w;
        std::vector<NodeId> cluster_d;
    };
    struct DecLayer {
        std::vector<NodeId> re;
        std::vector<NodeId> emb;
    };
    std::vector<EncLayer> enc;
    std::vector<DecLayer> dec;
};

inline TapeParams register_params(Tape& tape, const ModelParams& params) {
    TapeParams handles;
    for (const EncoderLayerParams& layer : params.enc) {
        TapeParams::EncLayer h;
        for (const Matrix& w : layer.assignment.weights) h.assignment.push_back(tape.leaf(w));
        if (!layer.projection.empty()) h.projection = tape.leaf(layer.projection);
        for (const Matrix& w : layer.cluster_w) h.cluster_w.push_back(tape.leaf(w));
        for (const Matrix& d : layer.cluster_d) h.cluster_d.push_back(tape.leaf(d));
        handles.enc.push_back(std::move(h));
    }
    for (const DecoderLayerParams& layer : params.dec) {
        TapeParams::DecLayer h;
        for (const Matrix& w : layer.re.weights) h.re.push_back(tape.leaf(w));
        for (const Matrix& w : layer.emb.weights) h.emb.push_back(tape.leaf(w));
        handles.dec.push_back(std::move(h));
    }
    return handles;
}

// Full encoder pass. `training` enables dropout (when rng given); the cache
// retains everything the loss needs.
inline EncoderCache encode(Tape& tape, const Graph& g, const ModelParams& params,
                           const TapeParams& handles, const TrainConfig& cfg,
                           bool training = false, Rng* rng = nullptr) {
    if (g.n < 1) throw std::invalid_argument("encode: empty graph");
    const int L = cfg.num_layers();
    EncoderCache cache;
    cache.size_chain.push_back(g.n);

    NodeId x = tape.constant(g.features);
    Matrix a_value = g.adjacency;
    NodeId a_node = cfg.variant == Variant::Soft ? tape.constant(g.adjacency) : -1;

    for (int l = 0; l < L; ++l) {
        const EncoderLayerParams& lp = params.enc[static_cast<std::size_t>(l)];
        const TapeParams::EncLayer& lh = handles.enc[static_cast<std::size_t>(l)];
        EncoderLayer layer;
        layer.n_in = tape.value(x).rows;
        layer.x_in = x;
        layer.a_in = a_value;
        layer.a_in_node = a_node;
        const int target = cfg.encoder_sizes[static_cast<std::size_t>(l)];
        const int m = std::min(target, layer.n_in);  // per-graph clamp
        layer.n_out = m;

        NodeId x_used = detail::apply_dropout(tape, x, training ? cfg.dropout : 0.0, rng);

        // Soft assignment: layer 1 propagates through the graph, deeper
        // layers project features directly.
        NodeId logits;
        if (l == 0) {
            NodeId ahat = tape.constant(normalize_adjacency(a_value));
            logits = detail::run_gnn_block(tape, ahat, x_used, lh.assignment, false);
        } else {
            logits = tape.matmul(x_used, lh.projection);
        }
        if (tape.value(logits).cols != m) logits = tape.slice_cols(logits, m);
        layer.soft_node = tape.row_softmax(logits);
        layer.soft = tape.value(layer.soft_node);

        auto w_of = [&](int j) { return lh.cluster_w[cfg.shared_subgraph_weights ? 0 : static_cast<std::size_t>(j)]; };
        auto d_of = [&](int j) { return lh.cluster_d[cfg.shared_subgraph_weights ? 0 : static_cast<std::size_t>(j)]; };
        const int d_out = tape.value(w_of(0)).cols;

        if (cfg.variant == Variant::Hard) {
            layer.hard = harden_assignment(layer.soft);
            layer.subgraphs = extract_subgraphs(tape.value(x), a_value, layer.hard);
            std::vector<NodeId> rows;
            rows.reserve(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) {
                const SubgraphView& view = layer.subgraphs[static_cast<std::size_t>(j)];
                if (view.nodes.empty()) {
                    layer.z_nodes.push_back(-1);
                    layer.s_nodes.push_back(-1);
                    rows.push_back(tape.constant(Matrix(1, d_out)));
                    continue;
                }
                NodeId x_j = tape.slice_rows(x_used, view.nodes);
                CoarsenOut co = coarsen_subgraph(tape, x_j, view.a, w_of(j), d_of(j));
                layer.z_nodes.push_back(co.z);
                layer.s_nodes.push_back(co.s_row);
                rows.push_back(tape.matmul(co.s_row, co.z));
            }
            layer.x_out = tape.vstack(rows);
            // Coarse adjacency S^T A S carries no gradient in this variant.
            Matrix st = transpose(layer.hard);
            layer.a_out = detail::zero_diagonal(matmul(matmul(st, a_value), layer.hard));
        } else {
            // Soft pooling over the whole graph: Z from one propagation with
            // the first cluster weight, then S_soft^T pooling; the adjacency
            // chain stays on the tape.
            NodeId ahat = l == 0 ? tape.constant(normalize_adjacency(a_value))
                                 : tape.normalize_adjacency(a_node);
            NodeId z_full = tape.matmul(ahat, tape.matmul(x_used, w_of(0)));
            NodeId st = tape.transpose(layer.soft_node);
            layer.x_out = tape.matmul(st, z_full);
            NodeId pooled = tape.matmul(st, tape.matmul(a_node, layer.soft_node));
            Matrix keep_off_diag = sub(Matrix::filled(m, m, 1.0), Matrix::identity(m));
            layer.a_out_node = tape.hadamard(pooled, tape.constant(std::move(keep_off_diag)));
            layer.a_out = tape.value(layer.a_out_node);
        }

        x = layer.x_out;
        a_value = layer.a_out;
        a_node = layer.a_out_node;
        cache.size_chain.push_back(m);
        cache.layers.push_back(std::move(layer));
    }
    cache.x_final = x;
    cache.a_final = a_value;
    cache.a_final_node = a_node;
    return cache;
}

// Column-wise mean or max of the final coarsened features: the graph-level
// representation.
inline Matrix readout(const Matrix& x, ReadoutMode mode) {
    if (x.rows < 1 || x.cols < 1) throw std::invalid_argument("readout: empty input");
    Matrix out(1, x.cols);
    for (int j = 0; j < x.cols; ++j) {
        if (mode == ReadoutMode::Mean) {
            double s = 0.0;
            for (int i = 0; i < x.rows; ++i) s += x(i, j);
            out(0, j) = s / x.rows;
        } else {
            double m = x(0, j);
            for (int i = 1; i < x.rows; ++i) m = std::max(m, x(i, j));
            out(0, j) = m;
        }
    }
    return out;
}

}  // namespace hcgae
