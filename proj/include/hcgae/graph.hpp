#pragma once

// Graph and dataset containers plus cross-validation fold planning.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcgae/matrix.hpp"

namespace hcgae {

struct Graph {
    int n = 0;
    Matrix features;             // n x d
    Matrix adjacency;            // n x n, symmetric, nonnegative, zero diagonal
    int label = -1;              // graph-level class, -1 if unlabeled
    std::vector<int> node_labels;  // per-node classes, empty if unlabeled

    int feature_dim() const { return features.cols; }
};

inline void validate_graph(const Graph& g, double sym_tol = 1e-9) {
    if (g.adjacency.rows != g.adjacency.cols)
        throw std::invalid_argument("graph: adjacency not square (" + g.adjacency.shape_str() + ")");
    if (g.adjacency.rows != g.n || g.features.rows != g.n)
        throw std::invalid_argument("graph: node count mismatch (n=" + std::to_string(g.n) +
                                    ", A=" + g.adjacency.shape_str() +
                                    ", X=" + g.features.shape_str() + ")");
    for (int i = 0; i < g.n; ++i) {
        if (g.adjacency(i, i) != 0.0)
            throw std::invalid_argument("graph: nonzero diagonal at node " + std::to_string(i));
        for (int j = 0; j < g.n; ++j) {
            if (g.adjacency(i, j) < 0.0)
                throw std::invalid_argument("graph: negative adjacency entry");
            if (std::abs(g.adjacency(i, j) - g.adjacency(j, i)) > sym_tol)
                throw std::invalid_argument("graph: asymmetric adjacency at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    if (!g.node_labels.empty() && static_cast<int>(g.node_labels.size()) != g.n)
        throw std::invalid_argument("graph: node label count mismatch");
    check_finite(g.features, "graph features");
    check_finite(g.adjacency, "graph adjacency");
}

enum class Task { GraphClassification, NodeClassification };

struct Dataset {
    std::string name;
    Task task = Task::GraphClassification;
    int num_classes = 0;
    std::vector<Graph> graphs;

    int feature_dim() const { return graphs.empty() ? 0 : graphs.front().feature_dim(); }

    int max_nodes() const {
        int m = 0;
        for (const Graph& g : graphs) m = std::max(m, g.n);
        return m;
    }

    // Classification items: graphs for the graph task, nodes of the single
    // graph for the node task.
    std::vector<int> item_labels() const {
        if (task == Task::NodeClassification) {
            if (graphs.size() != 1)
                throw std::logic_error("dataset: node task requires exactly one graph");
            return graphs.front().node_labels;
        }
        std::vector<int> labels;
        labels.reserve(graphs.size());
        for (const Graph& g : graphs) labels.push_back(g.label);
        return labels;
    }

    void validate() const {
        if (task == Task::NodeClassification && graphs.size() != 1)
            throw std::invalid_argument("dataset " + name + ": node task requires exactly one graph");
        for (const Graph& g : graphs) {
            validate_graph(g);
            if (g.feature_dim() != feature_dim())
                throw std::invalid_argument("dataset " + name + ": inconsistent feature dims");
        }
        for (int label : item_labels())
            if (label < 0 || label >= num_classes)
                throw std::invalid_argument("dataset " + name + ": label " + std::to_string(label) +
                                            " outside [0," + std::to_string(num_classes) + ")");
    }
};

struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    bool stratified = true;  // false when some class had fewer members than k
    std::vector<std::vector<int>> test_indices;
    std::vector<std::vector<int>> train_indices;
};

namespace detail {

inline FoldPlan deal_folds(const std::vector<std::vector<int>>& groups, int total, int k,
                           std::uint64_t seed, bool stratified) {
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.stratified = stratified;
    plan.test_indices.assign(static_cast<std::size_t>(k), {});
    // Rotating start offset keeps fold sizes within 1 of each other even when
    // group sizes are not multiples of k.
    int dealt = 0;
    for (const auto& group : groups) {
        for (std::size_t i = 0; i < group.size(); ++i)
            plan.test_indices[static_cast<std::size_t>((dealt + static_cast<int>(i)) % k)]
                .push_back(group[i]);
        dealt += static_cast<int>(group.size());
    }
    plan.train_indices.assign(static_cast<std::size_t>(k), {});
    std::vector<int> fold_of(static_cast<std::size_t>(total), -1);
    for (int f = 0; f < k; ++f) {
        std::sort(plan.test_indices[static_cast<std::size_t>(f)].begin(),
                  plan.test_indices[static_cast<std::size_t>(f)].end());
        for (int idx : plan.test_indices[static_cast<std::size_t>(f)])
            fold_of[static_cast<std::size_t>(idx)] = f;
    }
    for (int f = 0; f < k; ++f)
        for (int idx = 0; idx < total; ++idx)
            if (fold_of[static_cast<std::size_t>(idx)] != f)
                plan.train_indices[static_cast<std::size_t>(f)].push_back(idx);
    return plan;
}

}  // namespace detail

// Stratified k-fold split over labeled items. Falls back to an unstratified
// split (flagged) when some class has fewer members than k.
inline FoldPlan make_folds(const std::vector<int>& labels, int num_classes, int k,
                           std::uint64_t seed) {
    int total = static_cast<int>(labels.size());
    if (k < 2) throw std::invalid_argument("make_folds: k must be >= 2");
    if (total < k)
        throw std::invalid_argument("make_folds: only " + std::to_string(total) +
                                    " items for k=" + std::to_string(k));
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
    for (int i = 0; i < total; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

    bool stratified = true;
    for (const auto& group : by_class)
        if (!group.empty() && static_cast<int>(group.size()) < k) stratified = false;

    Rng rng(seed);
    if (!stratified) {
        std::vector<int> all(static_cast<std::size_t>(total));
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng.engine());
        return detail::deal_folds({all}, total, k, seed, false);
    }
    for (auto& group : by_class) std::shuffle(group.begin(), group.end(), rng.engine());
    return detail::deal_folds(by_class, total, k, seed, true);
}

inline FoldPlan make_folds(const Dataset& dataset, int k, std::uint64_t seed) {
    return make_folds(dataset.item_labels(), dataset.num_classes, k, seed);
}

}  // namespace hcgae
