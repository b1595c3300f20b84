#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "fd_helpers.hpp"
#include "hcgae/decoder.hpp"
#include "hcgae/model.hpp"
#include "oracles.hpp"

using hcgae::Graph;
using hcgae::Matrix;
using hcgae::NodeId;
using hcgae::Tape;
using hcgae::TrainConfig;

namespace {

TrainConfig mirror_config(std::vector<int> enc_sizes, int hidden) {
    TrainConfig cfg;
    cfg.encoder_sizes = std::move(enc_sizes);
    cfg.decoder_sizes.assign(cfg.encoder_sizes.rbegin(), cfg.encoder_sizes.rend());
    cfg.hidden_dim = hidden;
    cfg.dropout = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("decoder retraces the encoder's size chain back to the original graph") {
    hcgae::Rng rng(8);
    Graph g = testutil::random_test_graph(11, 4, 0.4, rng);
    TrainConfig cfg = mirror_config({6, 3}, 5);
    hcgae::ModelParams params = hcgae::init_params(cfg, 4, g.n, 2);
    Tape tape;
    auto handles = hcgae::register_params(tape, params);
    auto enc = hcgae::encode(tape, g, params, handles, cfg);
    auto dec = hcgae::decode(tape, enc, params, handles, cfg);

    REQUIRE(enc.size_chain == std::vector<int>{11, 6, 3});
    REQUIRE(dec.layers[0].n_out == 6);
    REQUIRE(dec.layers[1].n_out == 11);
    REQUIRE(tape.value(dec.x_final).rows == 11);
    REQUIRE(tape.value(dec.x_final).cols == 4);  // node-level, original feature dim
    REQUIRE(tape.value(dec.a_final).rows == 11);
}

TEST_CASE("every re-assignment is row-stochastic and the chain stays symmetric nonnegative") {
    hcgae::Rng rng(15);
    for (int trial = 0; trial < 5; ++trial) {
        Graph g = testutil::random_test_graph(rng.uniform_int(5, 12), 3, 0.5, rng);
        TrainConfig cfg = mirror_config({4, 2}, 4);
        hcgae::ModelParams params = hcgae::init_params(cfg, 3, g.n, rng.next_u64());
        Tape tape;
        auto handles = hcgae::register_params(tape, params);
        auto enc = hcgae::encode(tape, g, params, handles, cfg);
        auto dec = hcgae::decode(tape, enc, params, handles, cfg);
        for (const auto& layer : dec.layers) {
            const Matrix& s = tape.value(layer.reassignment);
            for (int i = 0; i < s.rows; ++i) {
                double row = 0.0;
                for (int j = 0; j < s.cols; ++j) row += s(i, j);
                REQUIRE_THAT(row, Catch::Matchers::WithinAbs(1.0, 1e-9));
            }
            const Matrix& a = tape.value(layer.a_out);
            REQUIRE(hcgae::is_symmetric(a, 1e-9));
            for (double v : a.data) REQUIRE(v >= 0.0);
        }
    }
}

TEST_CASE("zero re-assignment weights give uniform rows") {
    hcgae::Rng rng(3);
    Graph g = testutil::random_test_graph(6, 3, 0.5, rng);
    TrainConfig cfg = mirror_config({4, 2}, 4);
    hcgae::ModelParams params = hcgae::init_params(cfg, 3, g.n, 1);
    for (auto& layer : params.dec)
        for (Matrix& w : layer.re.weights) w = Matrix(w.rows, w.cols);
    Tape tape;
    auto handles = hcgae::register_params(tape, params);
    auto enc = hcgae::encode(tape, g, params, handles, cfg);
    auto dec = hcgae::decode(tape, enc, params, handles, cfg);
    for (const auto& layer : dec.layers) {
        const Matrix& s = tape.value(layer.reassignment);
        for (double v : s.data)
            REQUIRE_THAT(v, Catch::Matchers::WithinAbs(1.0 / s.cols, 1e-12));
    }
}

TEST_CASE("zero embedding weights give zero reconstructions") {
    hcgae::Rng rng(3);
    Graph g = testutil::random_test_graph(5, 3, 0.5, rng);
    TrainConfig cfg = mirror_config({3}, 4);
    hcgae::ModelParams params = hcgae::init_params(cfg, 3, g.n, 1);
    for (auto& layer : params.dec)
        for (Matrix& w : layer.emb.weights) w = Matrix(w.rows, w.cols);
    Tape tape;
    auto handles = hcgae::register_params(tape, params);
    auto enc = hcgae::encode(tape, g, params, handles, cfg);
    auto dec = hcgae::decode(tape, enc, params, handles, cfg);
    REQUIRE(hcgae::max_abs(tape.value(dec.x_final)) == 0.0);
}

TEST_CASE("expansion matches the naive triple-product oracle") {
    hcgae::Rng rng(21);
    Matrix s_val = hcgae::row_softmax(hcgae::random_uniform(3, 5, -1.0, 1.0, rng));
    Matrix z_val = hcgae::random_uniform(3, 4, -2.0, 2.0, rng);
    Matrix a_val = hcgae::random_uniform(3, 3, 0.0, 1.0, rng);
    Tape tape;
    auto [x, a] = hcgae::expand_layer(tape, tape.constant(s_val), tape.constant(z_val),
                                      tape.constant(a_val));
    Matrix st = hcgae::transpose(s_val);
    REQUIRE(hcgae::max_abs_diff(tape.value(x), oracle::matmul_naive(st, z_val)) < 1e-12);
    REQUIRE(hcgae::max_abs_diff(tape.value(a),
                                oracle::matmul_naive(oracle::matmul_naive(st, a_val), s_val)) <
            1e-12);

    SECTION("permutation re-assignment permutes") {
        Matrix perm = {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}};
        Tape t2;
        auto [xp, ap] = hcgae::expand_layer(t2, t2.constant(perm), t2.constant(z_val),
                                            t2.constant(a_val));
        const Matrix& xv = t2.value(xp);
        REQUIRE(xv(1, 0) == z_val(0, 0));  // row 0 lands at position 1
        REQUIRE(xv(2, 0) == z_val(1, 0));
        REQUIRE(xv(0, 0) == z_val(2, 0));
        const Matrix& av = t2.value(ap);
        REQUIRE(av(1, 1) == a_val(0, 0));
    }
    SECTION("uniform re-assignment spreads the total mass") {
        int m = 4;
        Matrix uniform = Matrix::filled(3, m, 1.0 / m);
        Tape t3;
        auto [xu, au] = hcgae::expand_layer(t3, t3.constant(uniform), t3.constant(z_val),
                                            t3.constant(a_val));
        double expected = hcgae::sum(a_val) / (m * m);
        for (double v : t3.value(au).data)
            REQUIRE_THAT(v, Catch::Matchers::WithinAbs(expected, 1e-12));
        (void)xu;
    }
}

TEST_CASE("re and emb blocks have distinct storage") {
    TrainConfig cfg = mirror_config({4, 2}, 4);
    hcgae::ModelParams params = hcgae::init_params(cfg, 3, 10, 5);
    Matrix emb_before = params.dec[0].emb.weights[0];
    params.dec[0].re.weights[0](0, 0) += 100.0;
    REQUIRE(params.dec[0].emb.weights[0].data == emb_before.data);
}

TEST_CASE("narrower-than-target re-assignment block is rejected") {
    hcgae::Rng rng(6);
    Graph g = testutil::random_test_graph(9, 3, 0.5, rng);
    TrainConfig cfg = mirror_config({4, 2}, 4);
    // init against a smaller max_n than the graph actually has
    hcgae::ModelParams params = hcgae::init_params(cfg, 3, 5, 1);
    Tape tape;
    auto handles = hcgae::register_params(tape, params);
    auto enc = hcgae::encode(tape, g, params, handles, cfg);
    REQUIRE_THROWS_AS(hcgae::decode(tape, enc, params, handles, cfg), std::invalid_argument);
}
