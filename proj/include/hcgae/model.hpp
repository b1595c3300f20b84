#pragma once

// One-call forward pass: registers parameters on a fresh tape, encodes,
// decodes, and evaluates the objective.

#include <map>
#include <string>
#include <utility>

#include "hcgae/decoder.hpp"
#include "hcgae/encoder.hpp"
#include "hcgae/gradcheck.hpp"
#include "hcgae/graph.hpp"
#include "hcgae/loss.hpp"
#include "hcgae/params.hpp"
#include "hcgae/tape.hpp"

namespace hcgae {

struct ForwardPass {
    Tape tape;
    TapeParams handles;
    EncoderCache enc;
    DecoderCache dec;
    LossReport loss;
};

// Verifies the tape's analytic gradients of the total loss against central
// finite differences over every parameter entry. Mutates `params` entry by
// entry during probing but restores each value.
inline GradCheckReport check_model_gradients(const Graph& g, ModelParams& params,
                                             const TrainConfig& cfg, double step = 1e-5);

inline ForwardPass forward_graph(const Graph& g, const ModelParams& params,
                                 const TrainConfig& cfg, bool training = false,
                                 Rng* rng = nullptr) {
    ForwardPass pass;
    pass.handles = register_params(pass.tape, params);
    pass.enc = encode(pass.tape, g, params, pass.handles, cfg, training, rng);
    pass.dec = decode(pass.tape, pass.enc, params, pass.handles, cfg, training, rng);
    pass.loss = total_loss(pass.tape, pass.enc, pass.dec, cfg.lambda_x, cfg.lambda_a);
    return pass;
}

// Runs backward from the total loss and accumulates parameter gradients into
// `grads` (keyed by registry name), creating entries on first use.
inline void accumulate_gradients(ForwardPass& pass, const ModelParams& params,
                                 std::map<std::string, Matrix>& grads) {
    pass.tape.backward(pass.loss.total_node);
    // Walk the registry in the same order handles were created.
    std::vector<NodeId> order;
    for (const auto& layer : pass.handles.enc) {
        for (NodeId id : layer.assignment) order.push_back(id);
        if (layer.projection >= 0) order.push_back(layer.projection);
        for (NodeId id : layer.cluster_w) order.push_back(id);
        for (NodeId id : layer.cluster_d) order.push_back(id);
    }
    for (const auto& layer : pass.handles.dec) {
        for (NodeId id : layer.re) order.push_back(id);
        for (NodeId id : layer.emb) order.push_back(id);
    }
    std::size_t at = 0;
    for_each_param(const_cast<ModelParams&>(params), [&](const std::string& name, Matrix& m) {
        const Matrix& g = pass.tape.grad(order[at++]);
        auto [it, inserted] = grads.try_emplace(name, Matrix(m.rows, m.cols));
        for (std::size_t i = 0; i < g.size(); ++i) it->second.data[i] += g.data[i];
    });
}

inline GradCheckReport check_model_gradients(const Graph& g, ModelParams& params,
                                             const TrainConfig& cfg, double step) {
    std::map<std::string, Matrix> analytic;
    {
        auto pass = forward_graph(g, params, cfg);
        accumulate_gradients(pass, params, analytic);
    }
    std::vector<std::pair<std::string, Matrix*>> slots;
    for_each_param(params, [&](const std::string& name, Matrix& m) { slots.emplace_back(name, &m); });
    auto loss_fn = [&]() { return forward_graph(g, params, cfg).loss.total; };
    return check_gradients(loss_fn, slots, analytic, step);
}

}  // namespace hcgae
