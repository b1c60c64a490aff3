#include "efi/network.hpp"

#include <cmath>
#include <stdexcept>

namespace efi {

namespace {

using ConstWeightMap = Eigen::Map<const Matrix>;
using WeightMap = Eigen::Map<Matrix>;
using ConstBiasMap = Eigen::Map<const Vector>;
using BiasMap = Eigen::Map<Vector>;

}  // namespace

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::kRelu;
    if (name == "tanh") return Activation::kTanh;
    if (name == "sigmoid") return Activation::kSigmoid;
    if (name == "softplus") return Activation::kSoftplus;
    throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation act) {
    switch (act) {
        case Activation::kRelu: return "relu";
        case Activation::kTanh: return "tanh";
        case Activation::kSigmoid: return "sigmoid";
        case Activation::kSoftplus: return "softplus";
    }
    return "relu";
}

void NetWorkspace::resize(const DenseNet& net, int n) {
    const int H = net.depth();
    act.resize(H + 1);
    delta.resize(H + 1);
    for (int h = 0; h <= H; ++h) {
        act[h].resize(n, net.layer_dim(h));
        if (h >= 1) delta[h].resize(n, net.layer_dim(h));
    }
}

DenseNet::DenseNet(std::vector<int> shape, Activation act)
    : shape_(std::move(shape)), act_(act) {
    if (shape_.size() < 2) {
        throw std::invalid_argument("network needs at least input and output layers");
    }
    for (int dim : shape_) {
        if (dim <= 0) throw std::invalid_argument("network layer dims must be positive");
    }
    offsets_.resize(shape_.size());
    int off = 0;
    for (std::size_t h = 1; h < shape_.size(); ++h) {
        offsets_[h - 1] = off;
        off += shape_[h - 1] * shape_[h] + shape_[h];
    }
    offsets_.back() = off;
}

void DenseNet::init_weights(Vector& w, CounterRng& rng) const {
    w.resize(num_weights());
    const int H = depth();
    for (int h = 1; h <= H; ++h) {
        const int rows = shape_[h];
        const int cols = shape_[h - 1];
        const double sd = std::sqrt(2.0 / cols);
        double* p = w.data() + offset(h);
        for (int i = 0; i < rows * cols; ++i) p[i] = sd * rng.normal();
        for (int i = 0; i < rows; ++i) p[rows * cols + i] = 0.0;
    }
}

void DenseNet::apply_activation(Matrix& a) const {
    switch (act_) {
        case Activation::kRelu:
            a = a.cwiseMax(0.0);
            break;
        case Activation::kTanh:
            a = a.array().tanh();
            break;
        case Activation::kSigmoid:
            a = ((-a.array()).exp() + 1.0).inverse();
            break;
        case Activation::kSoftplus:
            // log1p(exp(x)) with the large-x branch kept linear for stability.
            a = a.array().unaryExpr([](double x) {
                return x > 30.0 ? x : std::log1p(std::exp(x));
            });
            break;
    }
}

void DenseNet::apply_activation_grad(const Matrix& a, Matrix& d) const {
    // All four activations expose their derivative through the post-activation
    // value, so pre-activations never need storing.
    switch (act_) {
        case Activation::kRelu:
            d.array() *= (a.array() > 0.0).cast<double>();
            break;
        case Activation::kTanh:
            d.array() *= 1.0 - a.array().square();
            break;
        case Activation::kSigmoid:
            d.array() *= a.array() * (1.0 - a.array());
            break;
        case Activation::kSoftplus:
            d.array() *= 1.0 - (-a.array()).exp();
            break;
    }
}

void DenseNet::forward(const Vector& w, NetWorkspace& ws) const {
    const int H = depth();
    for (int h = 1; h <= H; ++h) {
        const int rows = shape_[h];
        const int cols = shape_[h - 1];
        ConstWeightMap W(w.data() + offset(h), rows, cols);
        ConstBiasMap b(w.data() + offset(h) + rows * cols, rows);
        ws.act[h].noalias() = ws.act[h - 1] * W.transpose();
        ws.act[h].rowwise() += b.transpose();
        if (h < H) apply_activation(ws.act[h]);
    }
}

void DenseNet::backprop_deltas(const Vector& w, NetWorkspace& ws) const {
    const int H = depth();
    for (int h = H; h >= 2; --h) {
        const int rows = shape_[h];
        const int cols = shape_[h - 1];
        ConstWeightMap W(w.data() + offset(h), rows, cols);
        ws.delta[h - 1].noalias() = ws.delta[h] * W;
        apply_activation_grad(ws.act[h - 1], ws.delta[h - 1]);
    }
}

void DenseNet::input_grad(const Vector& w, const NetWorkspace& ws,
                          Eigen::Ref<Matrix> dx) const {
    const int rows = shape_[1];
    const int cols = shape_[0];
    ConstWeightMap W(w.data() + offset(1), rows, cols);
    dx.noalias() = ws.delta[1] * W;
}

void DenseNet::weight_grad(const NetWorkspace& ws, Eigen::Ref<Vector> grad) const {
    const int H = depth();
    for (int h = 1; h <= H; ++h) {
        const int rows = shape_[h];
        const int cols = shape_[h - 1];
        WeightMap gW(grad.data() + offset(h), rows, cols);
        BiasMap gb(grad.data() + offset(h) + rows * cols, rows);
        gW.noalias() = ws.delta[h].transpose() * ws.act[h - 1];
        gb = ws.delta[h].colwise().sum();
    }
}

}  // namespace efi
