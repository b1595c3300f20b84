// Acceptance suite: one test case per release criterion, each printing a
// single [PASS]/[FAIL] line so the run log doubles as the sign-off record.
// Benchmark-dataset cases (MUTAG, Cora, PROTEINS, IMDB-B) read from the
// directory named by HCGAE_DATA_DIR (default ./data) and report an honest
// failure when the files are not present rather than skipping.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "hcgae/datasets.hpp"
#include "hcgae/encoder.hpp"
#include "hcgae/eval.hpp"
#include "hcgae/graph.hpp"
#include "hcgae/model.hpp"
#include "hcgae/train.hpp"
#include "fd_helpers.hpp"
#include "model_oracle.hpp"

using hcgae::Dataset;
using hcgae::Graph;
using hcgae::Matrix;
using hcgae::ModelParams;
using hcgae::Tape;
using hcgae::TrainConfig;

namespace {

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
}

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("HCGAE_DATA_DIR")) return env;
    return "data";
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

TrainConfig small_model(std::vector<int> enc_sizes, int hidden) {
    TrainConfig cfg;
    cfg.encoder_sizes = std::move(enc_sizes);
    cfg.decoder_sizes.assign(cfg.encoder_sizes.rbegin(), cfg.encoder_sizes.rend());
    cfg.hidden_dim = hidden;
    cfg.dropout = 0.0;
    return cfg;
}

// Loads a benchmark directory, reporting success and the error text so the
// criterion line can say exactly why the dataset half could not run.
bool try_load_tu(const std::filesystem::path& dir, Dataset& out, std::string& err) {
    try {
        out = hcgae::load_tu_dataset(dir);
        return true;
    } catch (const std::exception& e) {
        err = e.what();
        return false;
    }
}

}  // namespace

TEST_CASE("analytic gradients match central differences across random models") {
    auto start = std::chrono::steady_clock::now();
    hcgae::Rng rng(11);
    double worst = 0.0;
    bool all_ok = true;
    for (int trial = 0; trial < 25; ++trial) {
        int n = rng.uniform_int(4, 12);
        int d = rng.uniform_int(3, 8);
        Graph g = testutil::random_test_graph(n, d, 0.5, rng);
        TrainConfig cfg = small_model({4, 2}, 6);
        ModelParams params = hcgae::init_params(cfg, d, n, rng.next_u64());
        hcgae::GradCheckReport rep = hcgae::check_model_gradients(g, params, cfg, 1e-5);
        worst = std::max(worst, rep.worst);
        all_ok = all_ok && rep.ok(1e-4);
    }
    double secs = elapsed_seconds(start);
    bool ok = all_ok && secs < 120.0;
    report(1, ok,
           fmt("25 random models, worst relative gradient error %.3e (tolerance 1e-4), "
               "%.1f s (budget 120 s)",
               worst, secs));
    REQUIRE(ok);
}

TEST_CASE("hard assignments are one-hot and subgraphs isolate perturbations") {
    hcgae::Rng rng(22);

    bool one_hot_ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        int n = rng.uniform_int(1, 30);
        int m = rng.uniform_int(1, 12);
        Matrix logits = hcgae::random_uniform(n, m, -3.0, 3.0, rng);
        if (trial % 4 == 0)  // force full-row ties: lowest column must win
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) logits(i, j) = 0.25;
        Matrix soft = hcgae::row_softmax(logits);
        Matrix hard = hcgae::harden_assignment(soft);
        for (int i = 0; i < n; ++i) {
            int best = 0, ones = 0;
            for (int j = 1; j < m; ++j)
                if (soft(i, j) > soft(i, best)) best = j;
            for (int j = 0; j < m; ++j) {
                if (hard(i, j) == 1.0)
                    ++ones;
                else if (hard(i, j) != 0.0)
                    one_hot_ok = false;
            }
            one_hot_ok = one_hot_ok && ones == 1 && hard(i, best) == 1.0;
        }
    }

    bool partition_ok = true, isolation_ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        int n = rng.uniform_int(4, 20);
        int d = rng.uniform_int(3, 6);
        Graph g = testutil::random_test_graph(n, d, 0.4, rng);
        TrainConfig cfg = small_model({rng.uniform_int(2, 6)}, 5);
        ModelParams params = hcgae::init_params(cfg, d, n, rng.next_u64());
        Tape tape;
        auto handles = hcgae::register_params(tape, params);
        auto cache = hcgae::encode(tape, g, params, handles, cfg);
        const Matrix& hard = cache.layers[0].hard;

        auto base = hcgae::extract_subgraphs(g.features, g.adjacency, hard);
        std::vector<int> owner(static_cast<std::size_t>(n), -1);
        int covered = 0;
        for (std::size_t j = 0; j < base.size(); ++j)
            for (int v : base[j].nodes) {
                partition_ok = partition_ok && owner[static_cast<std::size_t>(v)] == -1;
                owner[static_cast<std::size_t>(v)] = static_cast<int>(j);
                ++covered;
            }
        partition_ok = partition_ok && covered == n;

        // Perturb one node's features; every other cluster's embedding must be
        // reproduced bit for bit because its view never reads the change.
        int victim = rng.uniform_int(0, n - 1);
        int victim_cluster = owner[static_cast<std::size_t>(victim)];
        Matrix perturbed = g.features;
        for (int c = 0; c < d; ++c) perturbed(victim, c) += 0.37;
        auto shifted = hcgae::extract_subgraphs(perturbed, g.adjacency, hard);
        for (std::size_t j = 0; j < base.size(); ++j) {
            if (base[j].nodes.empty()) continue;
            Tape t1, t2;
            auto w = t1.constant(params.enc[0].cluster_w[j]);
            auto dd = t1.constant(params.enc[0].cluster_d[j]);
            auto z1 = hcgae::coarsen_subgraph(t1, t1.constant(base[j].x), base[j].a, w, dd);
            auto w2 = t2.constant(params.enc[0].cluster_w[j]);
            auto dd2 = t2.constant(params.enc[0].cluster_d[j]);
            auto z2 = hcgae::coarsen_subgraph(t2, t2.constant(shifted[j].x), shifted[j].a, w2, dd2);
            double dz = hcgae::max_abs_diff(t1.value(z1.z), t2.value(z2.z));
            double ds = hcgae::max_abs_diff(t1.value(z1.s_row), t2.value(z2.s_row));
            if (static_cast<int>(j) == victim_cluster)
                isolation_ok = isolation_ok && dz > 0.0;
            else
                isolation_ok = isolation_ok && dz == 0.0 && ds == 0.0;
        }
    }

    bool ok = one_hot_ok && partition_ok && isolation_ok;
    report(2, ok,
           std::string("200 hardened matrices one-hot (ties to lowest column): ") +
               (one_hot_ok ? "yes" : "NO") +
               "; 50 graphs partitioned: " + (partition_ok ? "yes" : "NO") +
               "; cross-cluster leakage exactly zero: " + (isolation_ok ? "yes" : "NO"));
    REQUIRE(ok);
}

TEST_CASE("coarsening matches a straight-line re-derivation on all small graphs") {
    auto start = std::chrono::steady_clock::now();
    hcgae::Rng rng(33);
    long long graphs = 0;
    double worst = 0.0;
    bool exact_partition = true;

    for (int n = 1; n <= 6; ++n) {
        int bits = n * (n - 1) / 2;
        for (long long mask = 0; mask < (1LL << bits); ++mask) {
            Graph g;
            g.n = n;
            g.adjacency = Matrix(n, n);
            int bit = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j, ++bit)
                    if (mask & (1LL << bit)) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
            g.features = hcgae::random_uniform(n, 3, -1.0, 1.0, rng);

            int clusters = rng.uniform_int(1, 8);
            TrainConfig cfg = small_model({clusters}, 4);
            ModelParams params = hcgae::init_params(cfg, 3, n, rng.next_u64());
            Tape tape;
            auto handles = hcgae::register_params(tape, params);
            auto cache = hcgae::encode(tape, g, params, handles, cfg);
            const auto& layer = cache.layers[0];

            int m = std::min(clusters, n);
            std::vector<Matrix> w(params.enc[0].cluster_w.begin(),
                                  params.enc[0].cluster_w.begin() + m);
            std::vector<Matrix> dd(params.enc[0].cluster_d.begin(),
                                   params.enc[0].cluster_d.begin() + m);
            auto ref = oracle::coarse_layer_naive(g.features, g.adjacency,
                                                  params.enc[0].assignment.weights[0], true, w, dd,
                                                  m);
            exact_partition = exact_partition && hcgae::max_abs_diff(layer.hard, ref.hard) == 0.0;
            worst = std::max(worst, hcgae::max_abs_diff(tape.value(layer.x_out), ref.x_out));
            worst = std::max(worst, hcgae::max_abs_diff(layer.a_out, ref.a_out));
            ++graphs;
        }
    }
    REQUIRE(graphs == 33867);

    // 100 fresh parameter draws on the complete 6-node graph with two stacked
    // layers, checking the deeper (projection-based) assignment branch too.
    for (int draw = 0; draw < 100; ++draw) {
        Graph g;
        g.n = 6;
        g.adjacency = Matrix(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) g.adjacency(i, j) = i == j ? 0.0 : 1.0;
        g.features = hcgae::random_uniform(6, 3, -1.0, 1.0, rng);
        TrainConfig cfg = small_model({4, 2}, 4);
        ModelParams params = hcgae::init_params(cfg, 3, 6, rng.next_u64());
        Tape tape;
        auto handles = hcgae::register_params(tape, params);
        auto cache = hcgae::encode(tape, g, params, handles, cfg);

        const auto& first = cache.layers[0];
        std::vector<Matrix> w1(params.enc[0].cluster_w.begin(),
                               params.enc[0].cluster_w.begin() + 4);
        std::vector<Matrix> d1(params.enc[0].cluster_d.begin(),
                               params.enc[0].cluster_d.begin() + 4);
        auto ref1 = oracle::coarse_layer_naive(g.features, g.adjacency,
                                               params.enc[0].assignment.weights[0], true, w1, d1,
                                               4);
        worst = std::max(worst, hcgae::max_abs_diff(tape.value(first.x_out), ref1.x_out));
        worst = std::max(worst, hcgae::max_abs_diff(first.a_out, ref1.a_out));

        const auto& second = cache.layers[1];
        std::vector<Matrix> w2(params.enc[1].cluster_w.begin(),
                               params.enc[1].cluster_w.begin() + 2);
        std::vector<Matrix> d2(params.enc[1].cluster_d.begin(),
                               params.enc[1].cluster_d.begin() + 2);
        auto ref2 = oracle::coarse_layer_naive(tape.value(second.x_in), second.a_in,
                                               params.enc[1].projection, false, w2, d2, 2);
        exact_partition = exact_partition && hcgae::max_abs_diff(second.hard, ref2.hard) == 0.0;
        worst = std::max(worst, hcgae::max_abs_diff(tape.value(second.x_out), ref2.x_out));
        worst = std::max(worst, hcgae::max_abs_diff(second.a_out, ref2.a_out));
    }

    double secs = elapsed_seconds(start);
    bool ok = exact_partition && worst <= 1e-10;
    report(3, ok,
           fmt("33867 exhaustive graphs plus 100 two-layer draws, worst deviation %.3e "
               "(tolerance 1e-10), %.1f s",
               worst, secs));
    REQUIRE(ok);
}

TEST_CASE("MUTAG ten-fold accuracy clears the recorded floor") {
    Dataset data;
    std::string err;
    if (!try_load_tu(data_dir() / "MUTAG", data, err)) {
        report(4, false,
               "MUTAG unavailable under " + (data_dir() / "MUTAG").string() + " (" + err +
                   "); floor 0.80 not evaluated");
        REQUIRE(false);
        return;
    }
    auto start = std::chrono::steady_clock::now();
    TrainConfig cfg = TrainConfig::graph_defaults();
    cfg.seed = 0;
    hcgae::ModelCheckpoint ckpt = hcgae::train(data, cfg);
    hcgae::ClassifierConfig ccfg;
    ccfg.seed = 0;
    hcgae::EvalResult res = hcgae::cross_validate(ckpt, data, hcgae::make_folds(data, 10, 0), ccfg);
    double secs = elapsed_seconds(start);
    bool ok = res.mean >= 0.80 && secs < 900.0;
    report(4, ok,
           fmt("MUTAG mean accuracy %.4f (floor 0.80, reference 0.9238 +/- 0.0117, gap %+.4f), ",
               res.mean, res.mean - 0.9238) +
               fmt("%.0f s (budget 900 s)", secs));
    REQUIRE(ok);
}

TEST_CASE("Cora ten-fold accuracy clears the recorded floor") {
    Dataset data;
    std::string err;
    try {
        data = hcgae::load_citation_dataset(data_dir() / "cora");
    } catch (const std::exception& e) {
        report(5, false,
               "Cora unavailable under " + (data_dir() / "cora").string() + " (" +
                   std::string(e.what()) + "); floor 0.75 not evaluated");
        REQUIRE(false);
        return;
    }
    auto start = std::chrono::steady_clock::now();
    TrainConfig cfg = TrainConfig::node_defaults();
    cfg.seed = 0;
    hcgae::ModelCheckpoint ckpt = hcgae::train(data, cfg);
    hcgae::ClassifierConfig ccfg;
    ccfg.seed = 0;
    hcgae::EvalResult res = hcgae::cross_validate(ckpt, data, hcgae::make_folds(data, 10, 0), ccfg);
    double secs = elapsed_seconds(start);
    bool ok = res.mean >= 0.75 && secs < 1800.0;
    report(5, ok,
           fmt("Cora mean accuracy %.4f (floor 0.75, reference 0.8797 +/- 0.0010, gap %+.4f), ",
               res.mean, res.mean - 0.8797, 0.0) +
               fmt("%.0f s (budget 1800 s)", secs));
    REQUIRE(ok);
}

namespace {

// Synthetic ablation corpus: every graph is a two-block stochastic block model
// (p_in 0.5, p_out 0.05). Class 0 gives the two blocks distinct feature
// directions; class 1 draws every node around the blended midpoint, so graph
// means coincide and only per-community composition separates the classes --
// the signal subgraph isolation preserves and soft pooling averages away.
Dataset bimodal_corpus(int graphs, int nodes, double sigma, std::uint64_t seed) {
    Dataset data;
    data.name = "sbm-bimodal";
    data.task = hcgae::Task::GraphClassification;
    data.num_classes = 2;
    hcgae::Rng rng(seed);
    const int d = 8;
    for (int i = 0; i < graphs; ++i) {
        int cls = i % 2;
        int half = nodes / 2;
        Graph g;
        g.n = nodes;
        g.label = cls;
        g.adjacency = Matrix(nodes, nodes);
        for (int a = 0; a < nodes; ++a)
            for (int b = a + 1; b < nodes; ++b) {
                bool same_block = (a < half) == (b < half);
                if (rng.bernoulli(same_block ? 0.5 : 0.05))
                    g.adjacency(a, b) = g.adjacency(b, a) = 1.0;
            }
        g.features = Matrix(nodes, d);
        for (int a = 0; a < nodes; ++a)
            for (int j = 0; j < d; ++j) {
                double mean;
                if (cls == 0)
                    mean = ((a < half ? j == 0 : j == 1)) ? 1.0 : 0.0;
                else
                    mean = (j == 0 || j == 1) ? 0.5 : 0.0;
                g.features(a, j) = mean + rng.normal(0.0, sigma);
            }
        data.graphs.push_back(std::move(g));
    }
    data.validate();
    return data;
}

}  // namespace

TEST_CASE("hard-assignment pooling beats the soft ablation across seeds") {
    int sbm_wins = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Dataset data = bimodal_corpus(300, 30, 0.5, 1000 + seed);
        TrainConfig cfg = small_model({8, 4}, 16);
        cfg.epochs = 10;
        cfg.batch_size = 32;
        cfg.learning_rate = 1e-3;
        cfg.dropout = 0.5;
        cfg.readout = hcgae::ReadoutMode::Max;
        cfg.seed = static_cast<int>(seed);
        hcgae::ClassifierConfig ccfg;
        ccfg.seed = seed;
        hcgae::AblationResult r = hcgae::ablate_soft_encoder(
            data, cfg, hcgae::make_folds(data, 10, seed), ccfg);
        if (r.hard.mean > r.soft.mean) ++sbm_wins;
    }
    bool sbm_ok = sbm_wins >= 4;

    Dataset mutag;
    std::string err;
    bool mutag_ok = false;
    std::string mutag_note;
    if (try_load_tu(data_dir() / "MUTAG", mutag, err)) {
        int mutag_wins = 0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            TrainConfig cfg = TrainConfig::graph_defaults();
            cfg.seed = static_cast<int>(seed);
            hcgae::ClassifierConfig ccfg;
            ccfg.seed = seed;
            hcgae::AblationResult r = hcgae::ablate_soft_encoder(
                mutag, cfg, hcgae::make_folds(mutag, 10, seed), ccfg);
            if (r.hard.mean > r.soft.mean) ++mutag_wins;
        }
        mutag_ok = mutag_wins >= 4;
        mutag_note = fmt("MUTAG hard > soft in %.0f/5 seeds", mutag_wins);
    } else {
        mutag_note = "MUTAG half unavailable under " + (data_dir() / "MUTAG").string() + " (" +
                     err + ")";
    }

    bool ok = sbm_ok && mutag_ok;
    report(6, ok,
           fmt("synthetic 300-graph corpus hard > soft in %.0f/5 seeds (need 4); ",
               static_cast<double>(sbm_wins)) +
               mutag_note);
    REQUIRE(ok);
}

TEST_CASE("stacked convolutions oversmooth more than the pooled encoder") {
    int wins = 0;
    double gcn_sum = 0.0, enc_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Graph g = hcgae::make_sbm({50, 50}, 0.5, 0.1, 8, 500 + seed);
        auto gcn = hcgae::gcn_reference_layers(g, 128, 3, seed);
        double gcn_sim = hcgae::oversmoothing_metric(gcn.back());

        TrainConfig cfg = small_model({128, 64, 32}, 128);
        ModelParams params = hcgae::init_params(cfg, 8, g.n, seed);
        Tape tape;
        auto handles = hcgae::register_params(tape, params);
        auto cache = hcgae::encode(tape, g, params, handles, cfg);
        double enc_sim = hcgae::oversmoothing_metric(tape.value(cache.x_final));

        gcn_sum += gcn_sim;
        enc_sum += enc_sim;
        if (gcn_sim > enc_sim) ++wins;
    }
    bool ok = wins >= 8;
    report(7, ok,
           fmt("stacked-GCN similarity > pooled-encoder similarity in %.0f/10 seeds "
               "(need 8); means %.3f vs %.3f",
               static_cast<double>(wins), gcn_sum / 10.0, enc_sum / 10.0));
    REQUIRE(ok);
}

TEST_CASE("training is byte-deterministic and checkpoints round-trip bit-exactly") {
    Dataset data = hcgae::make_sbm_corpus(12, 2, 14, 3);
    TrainConfig cfg = small_model({4, 2}, 6);
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-3;
    cfg.dropout = 0.5;
    cfg.seed = 9;

    hcgae::ModelCheckpoint first = hcgae::train(data, cfg);
    hcgae::ModelCheckpoint second = hcgae::train(data, cfg);
    bool logs_identical = hcgae::format_loss_history(first.loss_history) ==
                          hcgae::format_loss_history(second.loss_history);

    std::filesystem::path path = std::filesystem::temp_directory_path() / "hcgae_acceptance.ckpt";
    hcgae::save_checkpoint(first, path.string());
    hcgae::ModelCheckpoint reloaded = hcgae::load_checkpoint(path.string());
    std::filesystem::remove(path);

    Matrix direct = hcgae::embed_dataset(first, data).features;
    Matrix rerun = hcgae::embed_dataset(second, data).features;
    Matrix roundtrip = hcgae::embed_dataset(reloaded, data).features;
    bool rerun_identical = hcgae::max_abs_diff(direct, rerun) == 0.0;
    bool roundtrip_identical = hcgae::max_abs_diff(direct, roundtrip) == 0.0;

    bool ok = logs_identical && rerun_identical && roundtrip_identical;
    report(8, ok,
           std::string("fixed-seed loss logs byte-identical: ") + (logs_identical ? "yes" : "NO") +
               "; rerun embeddings bit-identical: " + (rerun_identical ? "yes" : "NO") +
               "; checkpoint round-trip bit-identical: " + (roundtrip_identical ? "yes" : "NO"));
    REQUIRE(ok);
}

TEST_CASE("TU ingestion reproduces recorded corpus statistics") {
    struct Expect {
        const char* name;
        std::vector<std::string> dirs;  // accepted directory names, tried in order
        int graphs;
        int classes;
        double mean_nodes;
        double mean_edges;
    };
    const std::vector<Expect> expected = {
        {"PROTEINS", {"PROTEINS"}, 1113, 2, 39.06, 72.82},
        {"IMDB-B", {"IMDB-BINARY", "IMDB-B"}, 1000, 2, 19.77, 96.53},
    };

    bool all_ok = true;
    std::string detail;
    for (const Expect& e : expected) {
        Dataset data;
        std::string err;
        bool loaded = false;
        for (const std::string& dir : e.dirs)
            if (try_load_tu(data_dir() / dir, data, err)) {
                loaded = true;
                break;
            }
        if (!loaded) {
            all_ok = false;
            detail += std::string(e.name) + " unavailable under " + data_dir().string() + " (" +
                      err + "); ";
            continue;
        }
        double node_sum = 0.0, edge_sum = 0.0;
        for (const Graph& g : data.graphs) {
            node_sum += g.n;
            double nnz = 0.0;
            for (double v : g.adjacency.data) nnz += v != 0.0 ? 1.0 : 0.0;
            edge_sum += nnz / 2.0;
        }
        double mean_nodes = node_sum / data.graphs.size();
        double mean_edges = edge_sum / data.graphs.size();
        bool match = static_cast<int>(data.graphs.size()) == e.graphs &&
                     data.num_classes == e.classes &&
                     std::abs(mean_nodes - e.mean_nodes) < 0.005 &&
                     std::abs(mean_edges - e.mean_edges) < 0.005;
        all_ok = all_ok && match;
        detail += std::string(e.name) +
                  fmt(": %.0f graphs, ", static_cast<double>(data.graphs.size())) +
                  fmt("mean nodes %.2f, mean edges %.2f", mean_nodes, mean_edges) +
                  (match ? " (match); " : " (MISMATCH); ");
    }
    report(9, all_ok, detail + "recorded statistics: PROTEINS 1113/39.06/72.82, IMDB-B 1000/19.77/96.53");
    REQUIRE(all_ok);
}
