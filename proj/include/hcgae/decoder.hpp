#pragma once

// Soft-assignment decoder. Each layer expands the current graph to the next
// larger size with two independent propagation blocks: a re-assignment block
// whose softmax distributes every coarse node over the finer nodes, and an
// embedding block producing the features to distribute. The adjacency chain
// is differentiable throughout.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "hcgae/encoder.hpp"
#include "hcgae/graph.hpp"
#include "hcgae/matrix.hpp"
#include "hcgae/params.hpp"
#include "hcgae/tape.hpp"

namespace hcgae {

struct DecoderLayer {
    int n_in = 0;
    int n_out = 0;            // reconstruction target size for this layer
    NodeId x_in = -1;
    NodeId a_in = -1;
    NodeId reassignment = -1;  // S-bar, n_in x n_out, row-stochastic
    NodeId embedding = -1;     // Z-bar, n_in x d_out
    NodeId x_out = -1;
    NodeId a_out = -1;
};

struct DecoderCache {
    std::vector<DecoderLayer> layers;
    NodeId x_final = -1;  // n x d_in node-level representations
    NodeId a_final = -1;
};

// Distributes coarse embeddings and adjacency over the finer graph:
// X'' = S-bar^T Z-bar, A'' = S-bar^T A' S-bar.
inline std::pair<NodeId, NodeId> expand_layer(Tape& tape, NodeId s_bar, NodeId z_bar, NodeId a) {
    NodeId st = tape.transpose(s_bar);
    return {tape.matmul(st, z_bar), tape.matmul(st, tape.matmul(a, s_bar))};
}

// Full decoder pass starting from the encoder's final coarsened graph. The
// per-layer output sizes retrace the encoder's (clamped) size chain backwards,
// ending at the original node count.
inline DecoderCache decode(Tape& tape, const EncoderCache& enc, const ModelParams& params,
                           const TapeParams& handles, const TrainConfig& cfg,
                           bool training = false, Rng* rng = nullptr) {
    const int L = cfg.num_layers();
    if (static_cast<int>(enc.size_chain.size()) != L + 1)
        throw std::invalid_argument("decode: encoder cache depth mismatch");
    DecoderCache cache;
    NodeId x = enc.x_final;
    NodeId a = enc.a_final_node >= 0 ? enc.a_final_node : tape.constant(enc.a_final);

    for (int l = 0; l < L; ++l) {
        const TapeParams::DecLayer& lh = handles.dec[static_cast<std::size_t>(l)];
        DecoderLayer layer;
        layer.x_in = x;
        layer.a_in = a;
        layer.n_in = tape.value(x).rows;
        // Mirror rule: layer l (0-based) rebuilds the graph the encoder saw
        // entering its layer L-l, whose node count is size_chain[L-l-1].
        layer.n_out = enc.size_chain[static_cast<std::size_t>(L - l - 1)];

        NodeId x_used = detail::apply_dropout(tape, x, training ? cfg.dropout : 0.0, rng);
        NodeId ahat = tape.normalize_adjacency(a);

        NodeId logits = detail::run_gnn_block(tape, ahat, x_used, lh.re, false);
        if (tape.value(logits).cols < layer.n_out)
            throw std::invalid_argument("decode: re-assignment block narrower than target size");
        if (tape.value(logits).cols != layer.n_out) logits = tape.slice_cols(logits, layer.n_out);
        layer.reassignment = tape.row_softmax(logits);
        layer.embedding = detail::run_gnn_block(tape, ahat, x_used, lh.emb, true);

        auto [x_out, a_out] = expand_layer(tape, layer.reassignment, layer.embedding, a);
        layer.x_out = x_out;
        layer.a_out = a_out;

        x = layer.x_out;
        a = layer.a_out;
        cache.layers.push_back(layer);
    }
    cache.x_final = x;
    cache.a_final = a;
    return cache;
}

}  // namespace hcgae
