#pragma once

// Model configuration, the layer dimension schedule, parameter containers,
// and Glorot initialization.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcgae/graph.hpp"
#include "hcgae/matrix.hpp"

namespace hcgae {

enum class Variant { Hard, Soft };  // Soft = full soft pooling, no subgraphs
enum class ReadoutMode { Mean, Max };

struct TrainConfig {
    Task task = Task::GraphClassification;
    int epochs = 50;
    int hidden_dim = 128;
    double dropout = 0.5;
    int batch_size = 64;          // graphs per step (graph task) / classifier batch (node task)
    double learning_rate = 5e-4;
    std::vector<int> encoder_sizes = {128, 64, 32};  // per-layer cluster targets
    std::vector<int> decoder_sizes = {32, 64, 128};  // per-layer input sizes (mirror)
    double lambda_x = 1.0;        // feature reconstruction weight
    double lambda_a = 1.0;        // structure reconstruction weight
    std::uint64_t seed = 0;
    ReadoutMode readout = ReadoutMode::Mean;
    bool shared_subgraph_weights = false;
    int gnn_depth = 1;
    double grad_clip = 0.0;       // 0 = off; >0 clips global gradient norm
    Variant variant = Variant::Hard;

    int num_layers() const { return static_cast<int>(encoder_sizes.size()); }

    static TrainConfig graph_defaults() { return TrainConfig{}; }

    static TrainConfig node_defaults() {
        TrainConfig cfg;
        cfg.task = Task::NodeClassification;
        cfg.batch_size = 1024;
        cfg.learning_rate = 1e-2;
        return cfg;
    }

    void validate() const {
        if (encoder_sizes.empty()) throw std::invalid_argument("config: no encoder layers");
        if (decoder_sizes.size() != encoder_sizes.size())
            throw std::invalid_argument("config: encoder/decoder depth mismatch");
        for (std::size_t i = 0; i + 1 < encoder_sizes.size(); ++i)
            if (encoder_sizes[i] <= encoder_sizes[i + 1])
                throw std::invalid_argument("config: encoder sizes must strictly decrease");
        for (std::size_t i = 0; i + 1 < decoder_sizes.size(); ++i)
            if (decoder_sizes[i] >= decoder_sizes[i + 1])
                throw std::invalid_argument("config: decoder sizes must strictly increase");
        for (std::size_t i = 0; i < encoder_sizes.size(); ++i) {
            if (encoder_sizes[i] < 1) throw std::invalid_argument("config: encoder size < 1");
            if (decoder_sizes[i] != encoder_sizes[encoder_sizes.size() - 1 - i])
                throw std::invalid_argument(
                    "config: decoder sizes must mirror encoder sizes (layer pairing)");
        }
        if (epochs < 0) throw std::invalid_argument("config: negative epochs");
        if (hidden_dim < 1) throw std::invalid_argument("config: hidden_dim < 1");
        if (!(dropout >= 0.0 && dropout < 1.0))
            throw std::invalid_argument("config: dropout outside [0,1)");
        if (batch_size < 1) throw std::invalid_argument("config: batch_size < 1");
        if (learning_rate <= 0.0) throw std::invalid_argument("config: learning_rate <= 0");
        if (gnn_depth < 1) throw std::invalid_argument("config: gnn_depth < 1");
        if (lambda_x < 0.0 || lambda_a < 0.0)
            throw std::invalid_argument("config: negative loss weight");
    }
};

// Resolved per-layer dimensions for a dataset (input feature dim d_in and the
// widest graph max_n decide the parameter shapes; per-graph clamping then uses
// leading slices of these).
struct DimSchedule {
    int d_in = 0;
    int max_n = 0;
    std::vector<int> enc_feat;      // d_0..d_L (d_0 = d_in, rest = hidden)
    std::vector<int> enc_clusters;  // configured c_1..c_L
    std::vector<int> dec_feat_in;   // decoder layer input feature dims
    std::vector<int> dec_feat_out;  // decoder embedding-block output dims
    std::vector<int> dec_width;     // decoder re-assignment block output widths
};

inline DimSchedule compute_dims(const TrainConfig& cfg, int d_in, int max_n) {
    cfg.validate();
    if (d_in < 1 || max_n < 1) throw std::invalid_argument("compute_dims: empty dataset");
    const int L = cfg.num_layers();
    DimSchedule dims;
    dims.d_in = d_in;
    dims.max_n = max_n;
    dims.enc_feat.push_back(d_in);
    for (int l = 0; l < L; ++l) dims.enc_feat.push_back(cfg.hidden_dim);
    dims.enc_clusters = cfg.encoder_sizes;
    for (int l = 0; l < L; ++l) {
        // Decoder layer l (0-based) reconstructs encoder layer L-l's input, so
        // its embedding matches that layer's feature dim and its width covers
        // that layer's node count.
        dims.dec_feat_in.push_back(l == 0 ? cfg.hidden_dim : dims.dec_feat_out.back());
        dims.dec_feat_out.push_back(l == L - 1 ? d_in : cfg.hidden_dim);
        dims.dec_width.push_back(l == L - 1 ? max_n : cfg.decoder_sizes[static_cast<std::size_t>(l) + 1]);
    }
    return dims;
}

// One multi-step propagation block: weights[0] maps the input dim to hidden,
// the last maps to the block's output width.
struct GnnBlockParams {
    std::vector<Matrix> weights;
};

struct EncoderLayerParams {
    GnnBlockParams assignment;     // layer 1 only: assignment GNN
    Matrix projection;             // layers > 1: d_(l) x c_(l+1)
    std::vector<Matrix> cluster_w;  // per-cluster d_(l) x d_(l+1)
    std::vector<Matrix> cluster_d;  // per-cluster d_(l) x 1 mapping vectors
};

struct DecoderLayerParams {
    GnnBlockParams re;   // re-assignment block
    GnnBlockParams emb;  // embedding block
};

struct ModelParams {
    std::vector<EncoderLayerParams> enc;
    std::vector<DecoderLayerParams> dec;
};

namespace detail {

inline Matrix glorot(int fan_in, int fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    return random_uniform(fan_in, fan_out, -bound, bound, rng);
}

inline GnnBlockParams init_block(int in_dim, int out_dim, int depth, int hidden, Rng& rng) {
    GnnBlockParams block;
    for (int step = 0; step < depth; ++step) {
        int a = step == 0 ? in_dim : hidden;
        int b = step == depth - 1 ? out_dim : hidden;
        block.weights.push_back(glorot(a, b, rng));
    }
    return block;
}

}  // namespace detail

inline ModelParams init_params(const TrainConfig& cfg, int d_in, int max_n, std::uint64_t seed) {
    DimSchedule dims = compute_dims(cfg, d_in, max_n);
    const int L = cfg.num_layers();
    Rng rng(seed);
    ModelParams params;
    for (int l = 0; l < L; ++l) {
        EncoderLayerParams layer;
        int feat_in = dims.enc_feat[static_cast<std::size_t>(l)];
        int feat_out = dims.enc_feat[static_cast<std::size_t>(l) + 1];
        int clusters = dims.enc_clusters[static_cast<std::size_t>(l)];
        if (l == 0)
            layer.assignment = detail::init_block(feat_in, clusters, cfg.gnn_depth,
                                                  cfg.hidden_dim, rng);
        else
            layer.projection = detail::glorot(feat_in, clusters, rng);
        int distinct = cfg.shared_subgraph_weights ? 1 : clusters;
        for (int j = 0; j < distinct; ++j) {
            layer.cluster_w.push_back(detail::glorot(feat_in, feat_out, rng));
            layer.cluster_d.push_back(detail::glorot(feat_in, 1, rng));
        }
        params.enc.push_back(std::move(layer));
    }
    for (int l = 0; l < L; ++l) {
        DecoderLayerParams layer;
        layer.re = detail::init_block(dims.dec_feat_in[static_cast<std::size_t>(l)],
                                      dims.dec_width[static_cast<std::size_t>(l)],
                                      cfg.gnn_depth, cfg.hidden_dim, rng);
        layer.emb = detail::init_block(dims.dec_feat_in[static_cast<std::size_t>(l)],
                                       dims.dec_feat_out[static_cast<std::size_t>(l)],
                                       cfg.gnn_depth, cfg.hidden_dim, rng);
        params.dec.push_back(std::move(layer));
    }
    return params;
}

// Visits every parameter matrix with a stable name, in a fixed order shared by
// the optimizer, checkpoint format, and gradient checks.
template <typename ParamsT, typename Fn>
void for_each_param(ParamsT& params, Fn&& fn) {
    for (std::size_t l = 0; l < params.enc.size(); ++l) {
        auto& layer = params.enc[l];
        const std::string prefix = "enc" + std::to_string(l + 1) + ".";
        for (std::size_t i = 0; i < layer.assignment.weights.size(); ++i)
            fn(prefix + "assign.w" + std::to_string(i), layer.assignment.weights[i]);
        if (!layer.projection.empty()) fn(prefix + "proj", layer.projection);
        for (std::size_t j = 0; j < layer.cluster_w.size(); ++j)
            fn(prefix + "sub" + std::to_string(j) + ".w", layer.cluster_w[j]);
        for (std::size_t j = 0; j < layer.cluster_d.size(); ++j)
            fn(prefix + "sub" + std::to_string(j) + ".d", layer.cluster_d[j]);
    }
    for (std::size_t l = 0; l < params.dec.size(); ++l) {
        auto& layer = params.dec[l];
        const std::string prefix = "dec" + std::to_string(l + 1) + ".";
        for (std::size_t i = 0; i < layer.re.weights.size(); ++i)
            fn(prefix + "re.w" + std::to_string(i), layer.re.weights[i]);
        for (std::size_t i = 0; i < layer.emb.weights.size(); ++i)
            fn(prefix + "emb.w" + std::to_string(i), layer.emb.weights[i]);
    }
}

inline std::size_t param_count(const ModelParams& params) {
    std::size_t total = 0;
    for_each_param(const_cast<ModelParams&>(params),
                   [&](const std::string&, Matrix& m) { total += m.size(); });
    return total;
}

}  // namespace hcgae
