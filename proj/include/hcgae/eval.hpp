#pragma once

// Downstream evaluation: frozen-embedding extraction, a linear one-vs-rest
// hinge classifier trained by mini-batch SGD, k-fold cross-validation, a
// mean-pairwise-cosine feature-collapse diagnostic, and the soft-assignment
// encoder ablation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcgae/config_io.hpp"
#include "hcgae/model.hpp"
#include "hcgae/train.hpp"

namespace hcgae {

// ---------------------------------------------------------------------------
// Embedding extraction

// Graph-level vector: readout over the encoder's coarsest feature matrix.
inline Matrix embed_graph(const ModelCheckpoint& ckpt, const Graph& g) {
    Tape tape;
    TapeParams handles = register_params(tape, ckpt.params);
    EncoderCache enc = encode(tape, g, ckpt.params, handles, ckpt.config);
    return readout(tape.value(enc.x_final), ckpt.config.readout);
}

// Node-level matrix: the decoder's final reconstructed features, one row per
// node of the original graph.
inline Matrix embed_nodes(const ModelCheckpoint& ckpt, const Graph& g) {
    Tape tape;
    TapeParams handles = register_params(tape, ckpt.params);
    EncoderCache enc = encode(tape, g, ckpt.params, handles, ckpt.config);
    DecoderCache dec = decode(tape, enc, ckpt.params, handles, ckpt.config);
    return tape.value(dec.x_final);
}

struct EmbeddedDataset {
    Matrix features;          // one row per item (graph or node)
    std::vector<int> labels;  // downstream class per item
};

inline EmbeddedDataset embed_dataset(const ModelCheckpoint& ckpt, const Dataset& data) {
    data.validate();
    if (data.graphs.empty()) throw std::invalid_argument("embed: dataset is empty");
    if (data.feature_dim() != ckpt.feature_dim)
        throw std::invalid_argument("embed: dataset feature width " +
                                    std::to_string(data.feature_dim()) +
                                    " does not match checkpoint width " +
                                    std::to_string(ckpt.feature_dim));
    EmbeddedDataset out;
    out.labels = data.item_labels();
    if (data.task == Task::GraphClassification) {
        Matrix first = embed_graph(ckpt, data.graphs[0]);
        out.features = Matrix(static_cast<int>(data.graphs.size()), first.cols);
        for (std::size_t i = 0; i < data.graphs.size(); ++i) {
            Matrix row = i == 0 ? first : embed_graph(ckpt, data.graphs[i]);
            for (int c = 0; c < row.cols; ++c) out.features(static_cast<int>(i), c) = row(0, c);
        }
    } else {
        if (data.graphs.size() != 1)
            throw std::invalid_argument("embed: node-level embedding expects a single-graph dataset");
        out.features = embed_nodes(ckpt, data.graphs[0]);
    }
    check_finite(out.features, "embeddings");
    return out;
}

// ---------------------------------------------------------------------------
// Linear one-vs-rest hinge classifier

struct ClassifierConfig {
    int epochs = 200;
    int batch_size = 1024;
    double learning_rate = 1e-2;
    double reg_c = 1.0;  // inverse regularization strength; weight decay is 1/(reg_c * n)
    std::uint64_t seed = 0;
};

struct LinearClassifier {
    Matrix weights;            // num_classes x dim
    Matrix bias;               // 1 x num_classes
    Matrix feature_mean;       // 1 x dim (training-split statistics)
    Matrix feature_scale;      // 1 x dim, strictly positive
    int num_classes = 0;

    Matrix standardize(const Matrix& x) const {
        Matrix z = x;
        for (int i = 0; i < z.rows; ++i)
            for (int j = 0; j < z.cols; ++j)
                z(i, j) = (z(i, j) - feature_mean(0, j)) / feature_scale(0, j);
        return z;
    }

    int predict_row(const Matrix& z, int row) const {
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < num_classes; ++c) {
            double s = bias(0, c);
            for (int j = 0; j < z.cols; ++j) s += weights(c, j) * z(row, j);
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        return best;
    }

    std::vector<int> predict(const Matrix& x) const {
        Matrix z = standardize(x);
        std::vector<int> out(static_cast<std::size_t>(z.rows));
        for (int i = 0; i < z.rows; ++i) out[static_cast<std::size_t>(i)] = predict_row(z, i);
        return out;
    }
};

inline LinearClassifier fit_linear_classifier(const Matrix& x, const std::vector<int>& y,
                                              const ClassifierConfig& cfg) {
    if (x.rows == 0) throw std::invalid_argument("classifier: empty training set");
    if (static_cast<std::size_t>(x.rows) != y.size())
        throw std::invalid_argument("classifier: feature/label count mismatch");
    int num_classes = 0;
    for (int label : y) {
        if (label < 0) throw std::invalid_argument("classifier: negative label");
        num_classes = std::max(num_classes, label + 1);
    }
    int distinct = 0;
    {
        std::vector<char> seen(static_cast<std::size_t>(num_classes), 0);
        for (int label : y)
            if (!seen[static_cast<std::size_t>(label)]) {
                seen[static_cast<std::size_t>(label)] = 1;
                ++distinct;
            }
    }
    if (distinct < 2)
        throw std::invalid_argument("classifier: training data contains a single class");

    LinearClassifier clf;
    clf.num_classes = num_classes;
    clf.feature_mean = Matrix(1, x.cols);
    clf.feature_scale = Matrix(1, x.cols);
    for (int j = 0; j < x.cols; ++j) {
        double mean = 0.0;
        for (int i = 0; i < x.rows; ++i) mean += x(i, j);
        mean /= x.rows;
        double var = 0.0;
        for (int i = 0; i < x.rows; ++i) {
            double d = x(i, j) - mean;
            var += d * d;
        }
        var /= x.rows;
        clf.feature_mean(0, j) = mean;
        clf.feature_scale(0, j) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    Matrix z = clf.standardize(x);

    clf.weights = Matrix(num_classes, x.cols);
    clf.bias = Matrix(1, num_classes);
    const int n = x.rows;
    const double decay = 1.0 / (cfg.reg_c * static_cast<double>(n));
    Rng rng(cfg.seed);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int end = std::min(n, start + cfg.batch_size);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            // One-vs-rest hinge: each class sees the batch with +/-1 targets.
            Matrix wgrad(num_classes, x.cols);
            Matrix bgrad(1, num_classes);
            for (int b = start; b < end; ++b) {
                const int i = order[static_cast<std::size_t>(b)];
                for (int c = 0; c < num_classes; ++c) {
                    const double target = y[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
                    double score = clf.bias(0, c);
                    for (int j = 0; j < z.cols; ++j) score += clf.weights(c, j) * z(i, j);
                    if (target * score < 1.0) {
                        for (int j = 0; j < z.cols; ++j) wgrad(c, j) -= target * z(i, j);
                        bgrad(0, c) -= target;
                    }
                }
            }
            for (int c = 0; c < num_classes; ++c) {
                for (int j = 0; j < z.cols; ++j)
                    clf.weights(c, j) -=
                        cfg.learning_rate * (decay * clf.weights(c, j) + inv_b * wgrad(c, j));
                clf.bias(0, c) -= cfg.learning_rate * inv_b * bgrad(0, c);
            }
        }
    }
    return clf;
}

inline double classification_accuracy(const LinearClassifier& clf, const Matrix& x,
                                      const std::vector<int>& y) {
    if (x.rows == 0) throw std::invalid_argument("accuracy: empty evaluation set");
    std::vector<int> pred = clf.predict(x);
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == y[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Cross-validation

struct EvalResult {
    std::vector<double> fold_accuracy;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation over folds
    Task task = Task::GraphClassification;
    std::string dataset;
    std::uint64_t config_digest = 0;

    void summarize() {
        if (fold_accuracy.empty()) throw std::invalid_argument("eval: no folds");
        mean = std::accumulate(fold_accuracy.begin(), fold_accuracy.end(), 0.0) /
               static_cast<double>(fold_accuracy.size());
        double var = 0.0;
        for (double a : fold_accuracy) var += (a - mean) * (a - mean);
        stddev = std::sqrt(var / static_cast<double>(fold_accuracy.size()));
    }
};

// Fold loop over precomputed embeddings; the autoencoder never sees labels,
// so embedding once up front is sound and keeps folds cheap.
inline EvalResult cross_validate_embeddings(const Matrix& features, const std::vector<int>& labels,
                                            const FoldPlan& plan, const ClassifierConfig& ccfg) {
    if (static_cast<std::size_t>(features.rows) != labels.size())
        throw std::invalid_argument("eval: feature/label count mismatch");
    EvalResult result;
    for (std::size_t f = 0; f < plan.test_indices.size(); ++f) {
        const auto& train_ids = plan.train_indices[f];
        const auto& test_ids = plan.test_indices[f];
        Matrix train_x(static_cast<int>(train_ids.size()), features.cols);
        Matrix test_x(static_cast<int>(test_ids.size()), features.cols);
        std::vector<int> train_y, test_y;
        train_y.reserve(train_ids.size());
        test_y.reserve(test_ids.size());
        for (std::size_t i = 0; i < train_ids.size(); ++i) {
            for (int j = 0; j < features.cols; ++j)
                train_x(static_cast<int>(i), j) = features(train_ids[i], j);
            train_y.push_back(labels[static_cast<std::size_t>(train_ids[i])]);
        }
        for (std::size_t i = 0; i < test_ids.size(); ++i) {
            for (int j = 0; j < features.cols; ++j)
                test_x(static_cast<int>(i), j) = features(test_ids[i], j);
            test_y.push_back(labels[static_cast<std::size_t>(test_ids[i])]);
        }
        ClassifierConfig fold_cfg = ccfg;
        fold_cfg.seed = ccfg.seed + f;
        LinearClassifier clf = fit_linear_classifier(train_x, train_y, fold_cfg);
        result.fold_accuracy.push_back(classification_accuracy(clf, test_x, test_y));
    }
    result.summarize();
    return result;
}

inline EvalResult cross_validate(const ModelCheckpoint& ckpt, const Dataset& data,
                                 const FoldPlan& plan, const ClassifierConfig& ccfg) {
    EmbeddedDataset emb = embed_dataset(ckpt, data);
    EvalResult result = cross_validate_embeddings(emb.features, emb.labels, plan, ccfg);
    result.task = data.task;
    result.dataset = data.name;
    result.config_digest = config_digest(ckpt.config);
    return result;
}

// ---------------------------------------------------------------------------
// Feature-collapse diagnostic

// Mean cosine similarity over distinct row pairs, with all-zero rows treated
// as contributing similarity 0. Uses the identity
//   sum_{i<j} cos(i,j) = (|sum_i u_i|^2 - sum_i |u_i|^2) / 2
// over unit-normalized rows u_i, so the cost is O(rows * cols).
inline double oversmoothing_metric(const Matrix& x) {
    if (x.rows < 2) throw std::invalid_argument("oversmoothing metric needs at least 2 rows");
    std::vector<double> acc(static_cast<std::size_t>(x.cols), 0.0);
    double unit_count = 0.0;  // sum of |u_i|^2: 1 per nonzero row
    for (int i = 0; i < x.rows; ++i) {
        double norm_sq = 0.0;
        for (int j = 0; j < x.cols; ++j) norm_sq += x(i, j) * x(i, j);
        if (norm_sq <= 0.0) continue;
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (int j = 0; j < x.cols; ++j) acc[static_cast<std::size_t>(j)] += x(i, j) * inv;
        unit_count += 1.0;
    }
    double sum_sq = 0.0;
    for (double v : acc) sum_sq += v * v;
    const double pair_sum = 0.5 * (sum_sq - unit_count);
    const double pairs = 0.5 * static_cast<double>(x.rows) * static_cast<double>(x.rows - 1);
    return pair_sum / pairs;
}

// Per-layer coarse feature matrices from one encoder pass (layer outputs).
inline std::vector<Matrix> encoder_layer_features(const ModelCheckpoint& ckpt, const Graph& g) {
    Tape tape;
    TapeParams handles = register_params(tape, ckpt.params);
    EncoderCache enc = encode(tape, g, ckpt.params, handles, ckpt.config);
    std::vector<Matrix> out;
    out.reserve(enc.layers.size());
    for (const auto& layer : enc.layers) out.push_back(tape.value(layer.x_out));
    return out;
}

// Reference point for the diagnostic: a plain stacked graph-convolution
// network over the full graph (no pooling), randomly initialized.
inline std::vector<Matrix> gcn_reference_layers(const Graph& g, int hidden, int depth,
                                                std::uint64_t seed) {
    if (depth < 1) throw std::invalid_argument("gcn reference: depth must be >= 1");
    Rng rng(seed);
    Matrix ahat = normalize_adjacency(g.adjacency);
    Matrix h = g.features;
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(depth));
    for (int l = 0; l < depth; ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(h.cols + hidden));
        Matrix w = random_uniform(h.cols, hidden, -bound, bound, rng);
        h = relu(matmul(ahat, matmul(h, w)));
        out.push_back(h);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationResult {
    EvalResult hard;  // subgraph encoder with hardened assignments
    EvalResult soft;  // soft-assignment pooling throughout
};

inline AblationResult ablate_soft_encoder(const Dataset& data, const TrainConfig& cfg,
                                          const FoldPlan& plan, const ClassifierConfig& ccfg) {
    if (data.task != Task::GraphClassification)
        throw std::invalid_argument("ablation runs on graph-classification datasets");
    TrainConfig hard_cfg = cfg;
    hard_cfg.variant = Variant::Hard;
    TrainConfig soft_cfg = cfg;
    soft_cfg.variant = Variant::Soft;
    AblationResult out;
    out.hard = cross_validate(train(data, hard_cfg), data, plan, ccfg);
    out.soft = cross_validate(train(data, soft_cfg), data, plan, ccfg);
    return out;
}

}  // namespace hcgae
