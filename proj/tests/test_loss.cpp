#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "fd_helpers.hpp"
#include "hcgae/loss.hpp"
#include "hcgae/model.hpp"

using hcgae::DecoderCache;
using hcgae::DecoderLayer;
using hcgae::EncoderCache;
using hcgae::EncoderLayer;
using hcgae::Graph;
using hcgae::Matrix;
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

// Minimal hand-built caches for closed-form loss values.
EncoderCache cache_with_z(Tape& tape, const Matrix& z) {
    EncoderCache enc;
    EncoderLayer layer;
    layer.z_nodes.push_back(tape.leaf(z));
    enc.layers.push_back(std::move(layer));
    return enc;
}

}  // namespace

TEST_CASE("local term closed forms") {
    SECTION("all embeddings zero gives zero") {
        Tape tape;
        auto enc = cache_with_z(tape, Matrix(3, 4));
        REQUIRE(tape.value(hcgae::local_kl(tape, enc))(0, 0) == 0.0);
    }
    SECTION("single 1x1 embedding [2] gives 2.0") {
        Tape tape;
        auto enc = cache_with_z(tape, Matrix{{2.0}});
        REQUIRE(tape.value(hcgae::local_kl(tape, enc))(0, 0) == 2.0);
    }
    SECTION("doubling embeddings quadruples the term") {
        Matrix z = {{1.0, -2.0}, {0.5, 3.0}};
        Tape t1, t2;
        auto e1 = cache_with_z(t1, z);
        auto e2 = cache_with_z(t2, hcgae::scale(z, 2.0));
        double v1 = t1.value(hcgae::local_kl(t1, e1))(0, 0);
        double v2 = t2.value(hcgae::local_kl(t2, e2))(0, 0);
        REQUIRE_THAT(v2, Catch::Matchers::WithinRel(4.0 * v1, 1e-12));
    }
    SECTION("empty clusters contribute nothing") {
        Tape tape;
        EncoderCache enc;
        EncoderLayer layer;
        layer.z_nodes.push_back(-1);
        layer.z_nodes.push_back(tape.leaf(Matrix{{2.0}}));
        layer.z_nodes.push_back(-1);
        enc.layers.push_back(std::move(layer));
        REQUIRE(tape.value(hcgae::local_kl(tape, enc))(0, 0) == 2.0);
    }
    SECTION("row order within a subgraph does not matter") {
        Matrix z = {{1.0, 2.0}, {-3.0, 0.5}};
        Matrix swapped = {{-3.0, 0.5}, {1.0, 2.0}};
        Tape t1, t2;
        auto e1 = cache_with_z(t1, z);
        auto e2 = cache_with_z(t2, swapped);
        REQUIRE(t1.value(hcgae::local_kl(t1, e1))(0, 0) ==
                t2.value(hcgae::local_kl(t2, e2))(0, 0));
    }
}

TEST_CASE("global term closed forms") {
    Tape tape;
    EncoderCache enc;
    EncoderLayer el;
    el.x_in = tape.constant(Matrix{{1.0}});
    el.a_in = Matrix(1, 1);
    enc.layers.push_back(std::move(el));
    DecoderCache dec;
    DecoderLayer dl;
    dl.x_out = tape.constant(Matrix{{0.0}});
    dl.a_out = tape.constant(Matrix(1, 1));
    dec.layers.push_back(dl);

    SECTION("pure feature error is the mean squared difference") {
        auto node = hcgae::global_reconstruction(tape, enc, dec, 1.0, 0.0);
        REQUIRE(tape.value(node)(0, 0) == 1.0);
    }
    SECTION("weights scale their terms") {
        auto node = hcgae::global_reconstruction(tape, enc, dec, 2.5, 0.0);
        REQUIRE(tape.value(node)(0, 0) == 2.5);
    }
    SECTION("structure term at zero logits is log 2") {
        auto node = hcgae::global_reconstruction(tape, enc, dec, 0.0, 1.0);
        REQUIRE_THAT(tape.value(node)(0, 0),
                     Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
    }
}

TEST_CASE("global term matches a straight-line recomputation on a real pass") {
    hcgae::Rng rng(64);
    Graph g = testutil::random_test_graph(7, 4, 0.5, rng);
    TrainConfig cfg = mirror_config({4, 2}, 5);
    cfg.lambda_x = 0.7;
    cfg.lambda_a = 1.3;
    hcgae::ModelParams params = hcgae::init_params(cfg, 4, g.n, 19);
    auto pass = hcgae::forward_graph(g, params, cfg);

    double expected = 0.0;
    const int L = 2;
    for (int l = 0; l < L; ++l) {
        const auto& e = pass.enc.layers[l];
        const auto& d = pass.dec.layers[L - 1 - l];
        const Matrix& x_t = pass.tape.value(e.x_in);
        const Matrix& x_p = pass.tape.value(d.x_out);
        double mse = 0.0;
        for (std::size_t i = 0; i < x_t.size(); ++i) {
            double diff = x_t.data[i] - x_p.data[i];
            mse += diff * diff;
        }
        expected += cfg.lambda_x * mse / static_cast<double>(x_t.size());
        const Matrix& a_p = pass.tape.value(d.a_out);
        double bce = 0.0;
        for (std::size_t i = 0; i < a_p.size(); ++i) {
            double t = e.a_in.data[i] > 0.0 ? 1.0 : 0.0;
            double z = a_p.data[i];
            bce += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
        }
        expected += cfg.lambda_a * bce / static_cast<double>(a_p.size());
    }
    REQUIRE_THAT(pass.loss.global, Catch::Matchers::WithinRel(expected, 1e-12));
}

TEST_CASE("total is exactly local plus global and respects zero weights") {
    hcgae::Rng rng(12);
    Graph g = testutil::random_test_graph(6, 3, 0.5, rng);
    TrainConfig cfg = mirror_config({3}, 4);
    hcgae::ModelParams params = hcgae::init_params(cfg, 3, g.n, 4);
    auto pass = hcgae::forward_graph(g, params, cfg);
    REQUIRE(pass.loss.total == pass.loss.local + pass.loss.global);
    REQUIRE(pass.loss.local >= 0.0);
    REQUIRE(pass.loss.per_layer_local.size() == 1);
    REQUIRE(pass.loss.per_layer_global.size() == 1);

    TrainConfig off = cfg;
    off.lambda_x = 0.0;
    off.lambda_a = 0.0;
    auto pass2 = hcgae::forward_graph(g, params, off);
    REQUIRE(pass2.loss.total == pass2.loss.local);
    REQUIRE(pass2.loss.global == 0.0);
}

TEST_CASE("with both reconstruction weights zero only encoder parameters get gradients") {
    hcgae::Rng rng(13);
    Graph g = testutil::random_test_graph(6, 3, 0.5, rng);
    TrainConfig cfg = mirror_config({3}, 4);
    cfg.lambda_x = 0.0;
    cfg.lambda_a = 0.0;
    hcgae::ModelParams params = hcgae::init_params(cfg, 3, g.n, 4);
    auto pass = hcgae::forward_graph(g, params, cfg);
    std::map<std::string, Matrix> grads;
    hcgae::accumulate_gradients(pass, params, grads);
    double enc_norm = 0.0, dec_norm = 0.0;
    for (const auto& [name, gmat] : grads) {
        if (name.rfind("dec", 0) == 0) dec_norm += hcgae::max_abs(gmat);
        else enc_norm += hcgae::max_abs(gmat);
    }
    REQUIRE(dec_norm == 0.0);  // decoder is reachable only through reconstruction
    REQUIRE(enc_norm > 0.0);   // local term still trains the encoder
}

TEST_CASE("mismatched pairing shapes are rejected") {
    Tape tape;
    EncoderCache enc;
    EncoderLayer el;
    el.x_in = tape.constant(Matrix(2, 2));
    el.a_in = Matrix(2, 2);
    enc.layers.push_back(std::move(el));
    DecoderCache dec;
    DecoderLayer dl;
    dl.x_out = tape.constant(Matrix(1, 2));  // wrong node count
    dl.a_out = tape.constant(Matrix(1, 1));
    dec.layers.push_back(dl);
    REQUIRE_THROWS_AS(hcgae::global_reconstruction(tape, enc, dec, 1.0, 1.0),
                      std::invalid_argument);
}

TEST_CASE("full-pass gradients survive finite differences on hard and soft variants") {
    hcgae::Rng rng(2718);
    Graph g = testutil::random_test_graph(7, 4, 0.5, rng);

    TrainConfig cfg = mirror_config({4, 2}, 5);
    hcgae::ModelParams params = hcgae::init_params(cfg, 4, g.n, 31);
    auto report = testutil::model_gradcheck(g, params, cfg);
    INFO("hard variant worst rel err " << report.worst);
    REQUIRE(report.ok(1e-4));

    TrainConfig se = cfg;
    se.variant = hcgae::Variant::Soft;
    hcgae::ModelParams params2 = hcgae::init_params(se, 4, g.n, 32);
    auto report2 = testutil::model_gradcheck(g, params2, se);
    INFO("soft variant worst rel err " << report2.worst);
    REQUIRE(report2.ok(1e-4));
}
