#pragma once

// Composite objective: per-subgraph KL regularization of the coarsened
// embeddings (unit-variance Gaussian against a standard normal, which reduces
// to half the squared Frobenius norm) plus layer-paired reconstruction of
// features (mean squared error) and structure (logistic cross-entropy against
// the binarized adjacency).

#include <stdexcept>
#include <string>
#include <vector>

#include "hcgae/decoder.hpp"
#include "hcgae/encoder.hpp"
#include "hcgae/matrix.hpp"
#include "hcgae/tape.hpp"

namespace hcgae {

struct LossReport {
    double local = 0.0;
    double global = 0.0;
    double total = 0.0;
    std::vector<double> per_layer_local;   // one entry per encoder layer
    std::vector<double> per_layer_global;  // one entry per paired layer
    NodeId total_node = -1;
    NodeId local_node = -1;
    NodeId global_node = -1;
};

namespace detail {

inline Matrix binarize(const Matrix& a) {
    Matrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] > 0.0 ? 1.0 : 0.0;
    return out;
}

inline NodeId mse_mean(Tape& tape, NodeId target, NodeId prediction) {
    const Matrix& t = tape.value(target);
    const Matrix& p = tape.value(prediction);
    if (!t.same_shape(p))
        throw std::invalid_argument("loss: paired layer shape mismatch (" + t.shape_str() +
                                    " vs " + p.shape_str() + ")");
    NodeId diff = tape.sub(target, prediction);
    return tape.scale(tape.sum_all(tape.square(diff)), 1.0 / static_cast<double>(t.size()));
}

}  // namespace detail

// Sum over layers and nonempty subgraphs of KL(N(Z_j, I) || N(0, I)) =
// 1/2 ||Z_j||_F^2. Zero (with no gradient) for the soft variant, which has no
// subgraphs.
inline NodeId local_kl(Tape& tape, const EncoderCache& enc, LossReport* report = nullptr) {
    NodeId total = tape.constant(Matrix{{0.0}});
    for (const EncoderLayer& layer : enc.layers) {
        NodeId layer_sum = -1;
        for (NodeId z : layer.z_nodes) {
            if (z < 0) continue;  // empty cluster
            NodeId term = tape.scale(tape.sum_all(tape.square(z)), 0.5);
            layer_sum = layer_sum < 0 ? term : tape.add(layer_sum, term);
        }
        if (report)
            report->per_layer_local.push_back(layer_sum < 0 ? 0.0
                                                            : tape.value(layer_sum)(0, 0));
        if (layer_sum >= 0) total = tape.add(total, layer_sum);
    }
    return total;
}

// Sum over encoder layers l of lambda_x MSE(X^(l) in, X' out paired) +
// lambda_a BCE(A' out paired, 1[A^(l) in > 0]). The pairing walks the decoder
// outputs backwards: encoder layer l pairs with decoder layer L-l+1 (both
// 1-based), i.e. the decoder layer that rebuilt that size.
inline NodeId global_reconstruction(Tape& tape, const EncoderCache& enc, const DecoderCache& dec,
                                    double lambda_x, double lambda_a,
                                    LossReport* report = nullptr) {
    const int L = static_cast<int>(enc.layers.size());
    if (static_cast<int>(dec.layers.size()) != L)
        throw std::invalid_argument("loss: encoder/decoder layer count mismatch");
    NodeId total = tape.constant(Matrix{{0.0}});
    for (int l = 0; l < L; ++l) {
        const EncoderLayer& e = enc.layers[static_cast<std::size_t>(l)];
        const DecoderLayer& d = dec.layers[static_cast<std::size_t>(L - 1 - l)];
        NodeId term = tape.constant(Matrix{{0.0}});
        if (lambda_x != 0.0)
            term = tape.add(term, tape.scale(detail::mse_mean(tape, e.x_in, d.x_out), lambda_x));
        if (lambda_a != 0.0) {
            const Matrix& a_pred = tape.value(d.a_out);
            if (a_pred.rows != e.a_in.rows)
                throw std::invalid_argument("loss: paired adjacency shape mismatch (" +
                                            a_pred.shape_str() + " vs " + e.a_in.shape_str() + ")");
            NodeId bce = tape.bce_with_logits_mean(d.a_out, detail::binarize(e.a_in));
            term = tape.add(term, tape.scale(bce, lambda_a));
        }
        if (report) report->per_layer_global.push_back(tape.value(term)(0, 0));
        total = tape.add(total, term);
    }
    return total;
}

inline LossReport total_loss(Tape& tape, const EncoderCache& enc, const DecoderCache& dec,
                             double lambda_x, double lambda_a) {
    LossReport report;
    report.local_node = local_kl(tape, enc, &report);
    report.global_node = global_reconstruction(tape, enc, dec, lambda_x, lambda_a, &report);
    report.total_node = tape.add(report.local_node, report.global_node);
    report.local = tape.value(report.local_node)(0, 0);
    report.global = tape.value(report.global_node)(0, 0);
    report.total = tape.value(report.total_node)(0, 0);
    return report;
}

}  // namespace hcgae
