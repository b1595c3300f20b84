#pragma once

// Dataset ingestion (TU graph-classification collections, citation-network
// node-classification files) and synthetic stochastic-block-model generation.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcgae/graph.hpp"
#include "hcgae/matrix.hpp"

namespace hcgae {

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

inline std::vector<std::string> split_any(const std::string& line, const std::string& seps) {
    std::vector<std::string> out;
    std::string token;
    for (char c : line) {
        if (seps.find(c) != std::string::npos) {
            if (!token.empty()) out.push_back(std::move(token));
            token.clear();
        } else {
            token += c;
        }
    }
    if (!token.empty()) out.push_back(std::move(token));
    return out;
}

inline int parse_int(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(context + ": bad integer '" + s + "'");
    }
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(context + ": bad number '" + s + "'");
    }
}

// Locates <prefix><suffix> in dir by scanning for any file ending in suffix.
inline std::filesystem::path find_by_suffix(const std::filesystem::path& dir,
                                            const std::string& suffix, bool required) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("dataset directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            return entry.path();
    }
    if (required)
        throw std::runtime_error("missing required file *" + suffix + " in " + dir.string());
    return {};
}

inline std::vector<int> remap_labels(std::vector<int>& raw) {
    std::set<int> distinct(raw.begin(), raw.end());
    std::map<int, int> to_id;
    int next = 0;
    for (int v : distinct) to_id[v] = next++;
    for (int& v : raw) v = to_id[v];
    std::vector<int> order(distinct.begin(), distinct.end());
    return order;
}

}  // namespace detail

// Reads a TU-collection directory: *_A.txt (comma-separated 1-based edge
// pairs), *_graph_indicator.txt, *_graph_labels.txt, with optional
// *_node_attributes.txt / *_node_labels.txt. Feature precedence: real-valued
// attributes, then one-hot node labels, then one-hot node degree capped at 64
// for featureless graphs.
inline Dataset load_tu_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::path edges_path = detail::find_by_suffix(dir, "_A.txt", true);
    fs::path indicator_path = detail::find_by_suffix(dir, "_graph_indicator.txt", true);
    fs::path graph_labels_path = detail::find_by_suffix(dir, "_graph_labels.txt", true);
    fs::path node_attr_path = detail::find_by_suffix(dir, "_node_attributes.txt", false);
    fs::path node_label_path = detail::find_by_suffix(dir, "_node_labels.txt", false);

    // Node -> graph assignment (both 0-based after conversion).
    std::vector<int> graph_of;
    for (const std::string& line : detail::read_lines(indicator_path))
        graph_of.push_back(detail::parse_int(line, indicator_path.string()) - 1);
    const int total_nodes = static_cast<int>(graph_of.size());
    if (total_nodes == 0) throw std::runtime_error(indicator_path.string() + ": no nodes");

    std::vector<int> graph_labels;
    for (const std::string& line : detail::read_lines(graph_labels_path))
        graph_labels.push_back(detail::parse_int(line, graph_labels_path.string()));
    const int num_graphs = static_cast<int>(graph_labels.size());
    for (int g : graph_of)
        if (g < 0 || g >= num_graphs)
            throw std::runtime_error(indicator_path.string() + ": graph id out of range");
    detail::remap_labels(graph_labels);

    // Per-graph node index bases; nodes of one graph are contiguous in TU files.
    std::vector<int> nodes_per_graph(static_cast<std::size_t>(num_graphs), 0);
    for (int g : graph_of) ++nodes_per_graph[static_cast<std::size_t>(g)];
    std::vector<int> base(static_cast<std::size_t>(num_graphs), 0);
    for (int g = 1; g < num_graphs; ++g)
        base[static_cast<std::size_t>(g)] =
            base[static_cast<std::size_t>(g - 1)] + nodes_per_graph[static_cast<std::size_t>(g - 1)];
    std::vector<int> local_index(static_cast<std::size_t>(total_nodes));
    {
        std::vector<int> seen(static_cast<std::size_t>(num_graphs), 0);
        for (int v = 0; v < total_nodes; ++v)
            local_index[static_cast<std::size_t>(v)] = seen[static_cast<std::size_t>(graph_of[v])]++;
    }

    // Edges: symmetrize, drop self-loops, ignore weights/duplicates.
    std::vector<std::set<std::pair<int, int>>> edge_sets(static_cast<std::size_t>(num_graphs));
    for (const std::string& line : detail::read_lines(edges_path)) {
        auto tokens = detail::split_any(line, ", \t");
        if (tokens.size() < 2) throw std::runtime_error(edges_path.string() + ": bad edge line '" + line + "'");
        int a = detail::parse_int(tokens[0], edges_path.string()) - 1;
        int b = detail::parse_int(tokens[1], edges_path.string()) - 1;
        if (a < 0 || a >= total_nodes || b < 0 || b >= total_nodes)
            throw std::runtime_error(edges_path.string() + ": dangling edge (" +
                                     std::to_string(a + 1) + "," + std::to_string(b + 1) + ")");
        if (a == b) continue;
        if (graph_of[static_cast<std::size_t>(a)] != graph_of[static_cast<std::size_t>(b)])
            throw std::runtime_error(edges_path.string() + ": edge crosses graphs (" +
                                     std::to_string(a + 1) + "," + std::to_string(b + 1) + ")");
        int g = graph_of[static_cast<std::size_t>(a)];
        int la = local_index[static_cast<std::size_t>(a)], lb = local_index[static_cast<std::size_t>(b)];
        edge_sets[static_cast<std::size_t>(g)].insert({std::min(la, lb), std::max(la, lb)});
    }

    // Features.
    std::vector<std::vector<double>> attributes;
    std::vector<int> node_labels;
    int feature_dim = 0;
    if (!node_attr_path.empty()) {
        for (const std::string& line : detail::read_lines(node_attr_path)) {
            std::vector<double> row;
            for (const std::string& tok : detail::split_any(line, ", \t"))
                row.push_back(detail::parse_double(tok, node_attr_path.string()));
            if (attributes.empty()) feature_dim = static_cast<int>(row.size());
            else if (static_cast<int>(row.size()) != feature_dim)
                throw std::runtime_error(node_attr_path.string() + ": ragged attribute rows");
            attributes.push_back(std::move(row));
        }
        if (static_cast<int>(attributes.size()) != total_nodes)
            throw std::runtime_error(node_attr_path.string() + ": attribute count mismatch");
    } else if (!node_label_path.empty()) {
        for (const std::string& line : detail::read_lines(node_label_path))
            node_labels.push_back(detail::parse_int(line, node_label_path.string()));
        if (static_cast<int>(node_labels.size()) != total_nodes)
            throw std::runtime_error(node_label_path.string() + ": node label count mismatch");
        feature_dim = static_cast<int>(detail::remap_labels(node_labels).size());
    }

    Dataset dataset;
    dataset.name = edges_path.filename().string();
    dataset.name = dataset.name.substr(0, dataset.name.size() - std::string("_A.txt").size());
    dataset.task = Task::GraphClassification;
    dataset.graphs.resize(static_cast<std::size_t>(num_graphs));

    constexpr int kDegreeCap = 64;  // featureless graphs: one-hot degree, overflow bucket
    for (int g = 0; g < num_graphs; ++g) {
        Graph& graph = dataset.graphs[static_cast<std::size_t>(g)];
        graph.n = nodes_per_graph[static_cast<std::size_t>(g)];
        graph.label = graph_labels[static_cast<std::size_t>(g)];
        graph.adjacency = Matrix(graph.n, graph.n);
        for (const auto& [a, b] : edge_sets[static_cast<std::size_t>(g)])
            graph.adjacency(a, b) = graph.adjacency(b, a) = 1.0;
        if (!attributes.empty()) {
            graph.features = Matrix(graph.n, feature_dim);
            for (int v = 0; v < graph.n; ++v) {
                const auto& row = attributes[static_cast<std::size_t>(base[static_cast<std::size_t>(g)] + v)];
                for (int j = 0; j < feature_dim; ++j) graph.features(v, j) = row[static_cast<std::size_t>(j)];
            }
        } else if (!node_labels.empty()) {
            graph.features = Matrix(graph.n, feature_dim);
            for (int v = 0; v < graph.n; ++v)
                graph.features(v, node_labels[static_cast<std::size_t>(base[static_cast<std::size_t>(g)] + v)]) = 1.0;
        } else {
            graph.features = Matrix(graph.n, kDegreeCap + 1);
            for (int v = 0; v < graph.n; ++v) {
                int deg = 0;
                for (int u = 0; u < graph.n; ++u)
                    if (graph.adjacency(v, u) > 0.0) ++deg;
                graph.features(v, std::min(deg, kDegreeCap)) = 1.0;
            }
        }
    }
    dataset.num_classes = 1 + *std::max_element(graph_labels.begin(), graph_labels.end());
    dataset.validate();
    return dataset;
}

// Reads a citation-network directory: a *.content file of whitespace-separated
// `node_id feature... label` records plus a *.cites edge list of id pairs.
// Node order follows the content file; edges are symmetrized and deduplicated.
inline Dataset load_citation_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::path content_path = detail::find_by_suffix(dir, ".content", true);
    fs::path cites_path = detail::find_by_suffix(dir, ".cites", true);

    std::vector<std::string> ids;
    std::vector<std::vector<double>> features;
    std::vector<std::string> raw_labels;
    std::map<std::string, int> index_of;
    int feature_dim = -1;
    for (const std::string& line : detail::read_lines(content_path)) {
        auto tokens = detail::split_any(line, " \t");
        if (tokens.size() < 3)
            throw std::runtime_error(content_path.string() + ": record too short '" + line + "'");
        if (feature_dim < 0) feature_dim = static_cast<int>(tokens.size()) - 2;
        else if (static_cast<int>(tokens.size()) - 2 != feature_dim)
            throw std::runtime_error(content_path.string() + ": ragged feature rows");
        const std::string& id = tokens.front();
        if (index_of.count(id))
            throw std::runtime_error(content_path.string() + ": duplicate node id " + id);
        index_of[id] = static_cast<int>(ids.size());
        ids.push_back(id);
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(feature_dim));
        for (int j = 0; j < feature_dim; ++j)
            row.push_back(detail::parse_double(tokens[static_cast<std::size_t>(j) + 1],
                                               content_path.string()));
        features.push_back(std::move(row));
        raw_labels.push_back(tokens.back());
    }
    const int n = static_cast<int>(ids.size());
    if (n == 0) throw std::runtime_error(content_path.string() + ": no records");

    std::map<std::string, int> label_of;
    for (const std::string& s : std::set<std::string>(raw_labels.begin(), raw_labels.end()))
        label_of[s] = static_cast<int>(label_of.size());

    Graph graph;
    graph.n = n;
    graph.features = Matrix(n, feature_dim);
    graph.node_labels.reserve(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        for (int j = 0; j < feature_dim; ++j)
            graph.features(v, j) = features[static_cast<std::size_t>(v)][static_cast<std::size_t>(j)];
        graph.node_labels.push_back(label_of.at(raw_labels[static_cast<std::size_t>(v)]));
    }
    graph.adjacency = Matrix(n, n);
    for (const std::string& line : detail::read_lines(cites_path)) {
        auto tokens = detail::split_any(line, " \t");
        if (tokens.size() != 2)
            throw std::runtime_error(cites_path.string() + ": bad edge line '" + line + "'");
        auto a = index_of.find(tokens[0]), b = index_of.find(tokens[1]);
        if (a == index_of.end() || b == index_of.end())
            throw std::runtime_error(cites_path.string() + ": unknown node id in edge '" + line + "'");
        if (a->second == b->second) continue;
        graph.adjacency(a->second, b->second) = graph.adjacency(b->second, a->second) = 1.0;
    }

    Dataset dataset;
    dataset.name = content_path.stem().string();
    dataset.task = Task::NodeClassification;
    dataset.num_classes = static_cast<int>(label_of.size());
    dataset.graphs.push_back(std::move(graph));
    dataset.validate();
    return dataset;
}

// Stochastic block model: independent edge coin flips with within-block
// probability p_in and cross-block p_out, plus unit-variance Gaussian features
// whose mean encodes the block (mean = basis vector e_{b mod d}). Node labels
// are block ids.
inline Graph make_sbm(const std::vector<int>& block_sizes, double p_in, double p_out,
                      int feature_dim, std::uint64_t seed) {
    if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0))
        throw std::invalid_argument("make_sbm: need 0 <= p_out <= p_in <= 1");
    if (feature_dim < 1) throw std::invalid_argument("make_sbm: feature_dim must be >= 1");
    if (block_sizes.empty()) throw std::invalid_argument("make_sbm: no blocks");
    for (int s : block_sizes)
        if (s < 1) throw std::invalid_argument("make_sbm: empty block");

    Graph g;
    for (int s : block_sizes) g.n += s;
    std::vector<int> block_of;
    block_of.reserve(static_cast<std::size_t>(g.n));
    for (std::size_t b = 0; b < block_sizes.size(); ++b)
        for (int i = 0; i < block_sizes[b]; ++i) block_of.push_back(static_cast<int>(b));

    Rng rng(seed);
    g.adjacency = Matrix(g.n, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = i + 1; j < g.n; ++j) {
            double p = block_of[static_cast<std::size_t>(i)] == block_of[static_cast<std::size_t>(j)]
                           ? p_in : p_out;
            if (rng.bernoulli(p)) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
        }
    g.features = Matrix(g.n, feature_dim);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < feature_dim; ++j) {
            double mean = (block_of[static_cast<std::size_t>(i)] % feature_dim == j) ? 1.0 : 0.0;
            g.features(i, j) = rng.normal(mean, 1.0);
        }
    g.node_labels = std::move(block_of);
    return g;
}

// Synthetic graph-classification corpus: class c gets c+2 equal blocks over
// ~nodes_per_graph nodes, so the classes differ in community structure. Dense
// within-block wiring and sparse cross wiring keeps the signal structural.
inline Dataset make_sbm_corpus(int num_graphs, int num_classes, int nodes_per_graph,
                               std::uint64_t seed) {
    if (num_graphs < 1 || num_classes < 1)
        throw std::invalid_argument("make_sbm_corpus: need at least one graph and one class");
    Dataset dataset;
    dataset.name = "sbm";
    dataset.task = Task::GraphClassification;
    dataset.num_classes = num_classes;
    dataset.graphs.reserve(static_cast<std::size_t>(num_graphs));
    Rng rng(seed);
    constexpr int kFeatureDim = 8;
    for (int i = 0; i < num_graphs; ++i) {
        int c = i % num_classes;
        int blocks = c + 2;
        std::vector<int> sizes(static_cast<std::size_t>(blocks), nodes_per_graph / blocks);
        for (int r = 0; r < nodes_per_graph % blocks; ++r) ++sizes[static_cast<std::size_t>(r)];
        Graph g = make_sbm(sizes, 0.6, 0.05, kFeatureDim, rng.next_u64());
        g.label = c;
        g.node_labels.clear();  // corpus is graph-labeled only
        dataset.graphs.push_back(std::move(g));
    }
    dataset.validate();
    return dataset;
}

}  // namespace hcgae
