#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "efi/network.hpp"
#include "efi/rng.hpp"
#include "test_util.hpp"

using efi::Activation;
using efi::CounterRng;
using efi::DenseNet;
using efi::Matrix;
using efi::NetWorkspace;
using efi::Vector;
using efi_test::rel_err;

namespace {

// 0.5 * ||output||^2 over all rows, evaluated from scratch.
double half_sq_loss(const DenseNet& net, const Vector& w, const Matrix& X) {
    NetWorkspace ws;
    ws.resize(net, static_cast<int>(X.rows()));
    ws.act[0] = X;
    net.forward(w, ws);
    return 0.5 * ws.act.back().squaredNorm();
}

}  // namespace

TEST_CASE("weight counting matches the dense layer arithmetic") {
    DenseNet net({12, 300, 100, 10}, Activation::kRelu);
    CHECK(net.num_weights() == 35010);
    CHECK(net.depth() == 3);
    CHECK(net.input_dim() == 12);
    CHECK(net.output_dim() == 10);
    CHECK(net.layer_dim(1) == 300);

    DenseNet tiny({2, 3, 1}, Activation::kTanh);
    CHECK(tiny.num_weights() == 3 * 2 + 3 + 1 * 3 + 1);
}

TEST_CASE("network construction rejects degenerate shapes") {
    CHECK_THROWS_AS(DenseNet({5}, Activation::kRelu), std::invalid_argument);
    CHECK_THROWS_AS(DenseNet({4, 0, 2}, Activation::kRelu), std::invalid_argument);
    CHECK_THROWS_AS(DenseNet({4, -1}, Activation::kRelu), std::invalid_argument);
}

TEST_CASE("activation names round-trip") {
    for (const char* name : {"relu", "tanh", "sigmoid", "softplus"}) {
        CHECK(efi::to_string(efi::activation_from_string(name)) == name);
    }
    CHECK_THROWS_AS(efi::activation_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("forward pass agrees with a hand-rolled dense computation") {
    DenseNet net({2, 3, 1}, Activation::kTanh);
    Vector w(net.num_weights());
    // Layer blocks are row-major [out x in] weights followed by the biases.
    const double W1[3][2] = {{0.3, -0.2}, {0.5, 0.1}, {-0.4, 0.7}};
    const double b1[3] = {0.05, -0.1, 0.2};
    const double W2[3] = {1.2, -0.6, 0.9};
    const double b2 = -0.3;
    int at = net.offset(1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) w[at++] = W1[i][j];
    for (int i = 0; i < 3; ++i) w[at++] = b1[i];
    at = net.offset(2);
    for (int j = 0; j < 3; ++j) w[at++] = W2[j];
    w[at] = b2;

    Matrix X(2, 2);
    X << 0.7, -1.1, -0.4, 0.9;
    NetWorkspace ws;
    ws.resize(net, 2);
    ws.act[0] = X;
    net.forward(w, ws);

    for (int r = 0; r < 2; ++r) {
        double out = b2;
        for (int i = 0; i < 3; ++i) {
            const double pre = W1[i][0] * X(r, 0) + W1[i][1] * X(r, 1) + b1[i];
            out += W2[i] * std::tanh(pre);
        }
        CHECK(ws.act.back()(r, 0) == doctest::Approx(out).epsilon(1e-14));
    }
}

TEST_CASE("weight and input gradients match finite differences") {
    for (Activation act : {Activation::kTanh, Activation::kSigmoid,
                           Activation::kSoftplus, Activation::kRelu}) {
        DenseNet net({5, 7, 6, 3}, act);
        CounterRng rng(91 + static_cast<int>(act), 0);
        Vector w;
        net.init_weights(w, rng);
        // Nonzero biases so their gradient paths are exercised too.
        for (int i = 0; i < w.size(); ++i)
            if (w[i] == 0.0) w[i] = 0.3 * rng.normal();

        const int n = 4;
        Matrix X(n, 5);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < 5; ++c) X(r, c) = rng.normal();

        NetWorkspace ws;
        ws.resize(net, n);
        ws.act[0] = X;
        net.forward(w, ws);
        ws.delta.back() = ws.act.back();  // d(0.5*||out||^2)/d(out)
        net.backprop_deltas(w, ws);

        Vector gw(net.num_weights());
        net.weight_grad(ws, gw);
        Matrix gx(n, 5);
        net.input_grad(w, ws, gx);

        const double h = 1e-6;
        double worst = 0.0;
        for (int i = 0; i < w.size(); i += 3) {  // every third weight
            const double fd = efi_test::central_diff(
                w[i], h, [&] { return half_sq_loss(net, w, X); });
            worst = std::max(worst, rel_err(gw[i], fd));
        }
        Matrix Xp = X;
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < 5; ++c) {
                const double fd = efi_test::central_diff(
                    Xp(r, c), h, [&] { return half_sq_loss(net, w, Xp); });
                worst = std::max(worst, rel_err(gx(r, c), fd));
            }
        }
        INFO("activation ", efi::to_string(act), " worst rel err ", worst);
        CHECK(worst < 2e-5);
    }
}

TEST_CASE("fan-in initialization zeroes biases and scales weights") {
    DenseNet net({50, 400, 30}, Activation::kRelu);
    CounterRng rng(404, 0);
    Vector w;
    net.init_weights(w, rng);
    REQUIRE(w.size() == net.num_weights());

    // First-layer block: 400x50 weights then 400 zero biases.
    const int wcount = 400 * 50;
    const int base = net.offset(1);
    double sumsq = 0.0, sum = 0.0;
    for (int i = 0; i < wcount; ++i) {
        sum += w[base + i];
        sumsq += w[base + i] * w[base + i];
    }
    const double sd = std::sqrt(sumsq / wcount - (sum / wcount) * (sum / wcount));
    CHECK(sd == doctest::Approx(std::sqrt(2.0 / 50.0)).epsilon(0.03));
    for (int i = 0; i < 400; ++i) CHECK(w[base + wcount + i] == 0.0);

    // Deterministic given the generator state.
    CounterRng rng2(404, 0);
    Vector w2;
    net.init_weights(w2, rng2);
    CHECK((w - w2).cwiseAbs().maxCoeff() == 0.0);
}
