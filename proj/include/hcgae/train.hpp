#pragma once

// Self-supervised training: Adam optimization over the autoencoder objective,
// mini-batched for graph corpora and full-graph for node datasets, plus a
// versioned binary checkpoint container and a per-epoch loss log writer.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcgae/config_io.hpp"
#include "hcgae/model.hpp"

namespace hcgae {

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
    struct Moments {
        Matrix m;  // first moment (decayed mean of gradients)
        Matrix v;  // second moment (decayed mean of squared gradients)
    };
    std::map<std::string, Moments> slots;
    long long step_count = 0;  // completed optimizer steps (drives bias correction)
};

// Updates one tensor in place. `t` is the 1-based step index.
inline void adam_update(Matrix& param, const Matrix& grad, AdamState::Moments& mom,
                        long long t, double lr, double beta1, double beta2, double eps) {
    if (!param.same_shape(grad))
        throw std::invalid_argument("adam: gradient shape " + grad.shape_str() +
                                    " does not match parameter shape " + param.shape_str());
    if (mom.m.size() == 0) {
        mom.m = Matrix(param.rows, param.cols);
        mom.v = Matrix(param.rows, param.cols);
    }
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        double g = grad.data[i];
        mom.m.data[i] = beta1 * mom.m.data[i] + (1.0 - beta1) * g;
        mom.v.data[i] = beta2 * mom.v.data[i] + (1.0 - beta2) * g * g;
        double mhat = mom.m.data[i] / c1;
        double vhat = mom.v.data[i] / c2;
        param.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

// One optimizer step over every model tensor. Parameters without an entry in
// `grads` are treated as having a zero gradient.
inline void adam_step(ModelParams& params, const std::map<std::string, Matrix>& grads,
                      AdamState& state, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
    const long long t = ++state.step_count;
    for_each_param(params, [&](const std::string& name, Matrix& p) {
        auto it = grads.find(name);
        const Matrix zero = it == grads.end() ? Matrix(p.rows, p.cols) : Matrix();
        const Matrix& g = it == grads.end() ? zero : it->second;
        adam_update(p, g, state.slots[name], t, lr, beta1, beta2, eps);
    });
}

// Scales all gradients by clip/norm when the global L2 norm exceeds `clip`.
inline double clip_gradients(std::map<std::string, Matrix>& grads, double clip) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
        for (double x : g.data) sq += x * x;
    double norm = std::sqrt(sq);
    if (clip > 0.0 && norm > clip) {
        double s = clip / norm;
        for (auto& [name, g] : grads)
            for (double& x : g.data) x *= s;
    }
    return norm;
}

// ---------------------------------------------------------------------------
// Checkpoints

struct ModelCheckpoint {
    TrainConfig config;
    int feature_dim = 0;  // input feature width the parameters were built for
    int max_nodes = 0;    // widest graph seen at init (sizes the last decoder block)
    int epoch = 0;        // completed epochs
    std::vector<double> loss_history;  // per-epoch mean per-graph total loss
    ModelParams params;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

class ByteReader {
   public:
    explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

   private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated file");
    }
    std::string bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr char kCheckpointMagic[4] = {'H', 'C', 'G', 'A'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string encode_checkpoint(const ModelCheckpoint& ckpt) {
    std::string out;
    out.append(kCheckpointMagic, 4);
    detail::put_u32(out, kCheckpointVersion);
    const std::string cfg_text = serialize_config(ckpt.config);
    detail::put_u64(out, fnv1a64(cfg_text));
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.epoch));
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.feature_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.max_nodes));
    detail::put_u64(out, cfg_text.size());
    out += cfg_text;
    detail::put_u64(out, ckpt.loss_history.size());
    for (double v : ckpt.loss_history) detail::put_f64(out, v);
    std::uint64_t tensors = 0;
    for_each_param(const_cast<ModelParams&>(ckpt.params),
                   [&](const std::string&, Matrix&) { ++tensors; });
    detail::put_u64(out, tensors);
    for_each_param(const_cast<ModelParams&>(ckpt.params), [&](const std::string& name, Matrix& p) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        detail::put_u32(out, static_cast<std::uint32_t>(p.rows));
        detail::put_u32(out, static_cast<std::uint32_t>(p.cols));
        for (double v : p.data) detail::put_f64(out, v);
    });
    return out;
}

inline ModelCheckpoint decode_checkpoint(std::string bytes) {
    detail::ByteReader in(std::move(bytes));
    if (in.str(4) != std::string(kCheckpointMagic, 4))
        throw std::runtime_error("checkpoint: bad magic (not a checkpoint file)");
    std::uint32_t version = in.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    std::uint64_t digest = in.u64();
    ModelCheckpoint ckpt;
    ckpt.epoch = static_cast<int>(in.u32());
    ckpt.feature_dim = static_cast<int>(in.u32());
    ckpt.max_nodes = static_cast<int>(in.u32());
    std::string cfg_text = in.str(in.u64());
    if (fnv1a64(cfg_text) != digest)
        throw std::runtime_error("checkpoint: config digest mismatch");
    parse_config_text(cfg_text, ckpt.config);
    ckpt.config.validate();
    std::uint64_t hist = in.u64();
    ckpt.loss_history.reserve(hist);
    for (std::uint64_t i = 0; i < hist; ++i) ckpt.loss_history.push_back(in.f64());

    // Rebuild the parameter layout from the config, then fill every tensor
    // from the file, insisting on exact name/shape agreement.
    ckpt.params = init_params(ckpt.config, ckpt.feature_dim, ckpt.max_nodes, 0);
    std::map<std::string, Matrix*> slots;
    for_each_param(ckpt.params, [&](const std::string& name, Matrix& p) { slots[name] = &p; });
    std::uint64_t tensors = in.u64();
    if (tensors != slots.size())
        throw std::runtime_error("checkpoint: expected " + std::to_string(slots.size()) +
                                 " tensors, file has " + std::to_string(tensors));
    for (std::uint64_t i = 0; i < tensors; ++i) {
        std::string name = in.str(in.u32());
        auto it = slots.find(name);
        if (it == slots.end()) throw std::runtime_error("checkpoint: unexpected tensor '" + name + "'");
        int rows = static_cast<int>(in.u32());
        int cols = static_cast<int>(in.u32());
        if (rows != it->second->rows || cols != it->second->cols)
            throw std::runtime_error("checkpoint: tensor '" + name + "' has shape " +
                                     std::to_string(rows) + "x" + std::to_string(cols) +
                                     ", expected " + it->second->shape_str());
        for (double& v : it->second->data) v = in.f64();
    }
    if (!in.exhausted()) throw std::runtime_error("checkpoint: trailing bytes");
    return ckpt;
}

inline void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    std::string bytes = encode_checkpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

inline ModelCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(std::move(bytes));
}

// ---------------------------------------------------------------------------
// Training loop

inline ModelCheckpoint train(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.graphs.empty()) throw std::invalid_argument("train: dataset is empty");
    if (data.task != cfg.task)
        throw std::invalid_argument("train: dataset task does not match config task");

    ModelCheckpoint ckpt;
    ckpt.config = cfg;
    ckpt.feature_dim = data.feature_dim();
    ckpt.max_nodes = data.max_nodes();
    ckpt.params = init_params(cfg, ckpt.feature_dim, ckpt.max_nodes, cfg.seed);

    AdamState state;
    Rng rng(cfg.seed);  // drives both epoch shuffles and dropout masks
    const int num = static_cast<int>(data.graphs.size());
    std::vector<int> order(num);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        if (cfg.task == Task::GraphClassification) {
            std::shuffle(order.begin(), order.end(), rng.engine());
            for (int start = 0; start < num; start += cfg.batch_size) {
                const int end = std::min(num, start + cfg.batch_size);
                std::map<std::string, Matrix> grads;
                for (int i = start; i < end; ++i) {
                    auto pass = forward_graph(data.graphs[order[i]], ckpt.params, cfg,
                                              /*training=*/true, &rng);
                    accumulate_gradients(pass, ckpt.params, grads);
                    epoch_loss += pass.loss.total;
                }
                if (cfg.grad_clip > 0.0) clip_gradients(grads, cfg.grad_clip);
                adam_step(ckpt.params, grads, state, cfg.learning_rate);
            }
        } else {
            // Node datasets hold one graph; it forms a single full-graph step
            // per epoch (the configured batch size feeds the downstream
            // classifier, not this loop).
            std::map<std::string, Matrix> grads;
            for (const Graph& g : data.graphs) {
                auto pass = forward_graph(g, ckpt.params, cfg, /*training=*/true, &rng);
                accumulate_gradients(pass, ckpt.params, grads);
                epoch_loss += pass.loss.total;
            }
            if (cfg.grad_clip > 0.0) clip_gradients(grads, cfg.grad_clip);
            adam_step(ckpt.params, grads, state, cfg.learning_rate);
        }
        ckpt.loss_history.push_back(epoch_loss / num);
        ckpt.epoch = epoch + 1;
    }
    return ckpt;
}

// Per-epoch loss log: stable text so fixed-seed runs diff clean.
inline std::string format_loss_history(const std::vector<double>& history) {
    std::string out = "epoch,total_loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        out += std::to_string(i);
        out += ",";
        out += detail::format_double(history[i]);
        out += "\n";
    }
    return out;
}

inline void write_loss_history(const std::vector<double>& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("loss log: cannot open '" + path + "' for writing");
    std::string text = format_loss_history(history);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("loss log: write failed for '" + path + "'");
}

}  // namespace hcgae
