#ifndef EFI_NETWORK_HPP
#define EFI_NETWORK_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "efi/rng.hpp"

namespace efi {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kTanh, kSigmoid, kSoftplus };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation act);

class DenseNet;

// Per-chain scratch space: one activation and one delta matrix per layer,
// sized once so the iteration loop never allocates.  act[0] holds the input
// batch and is written by the caller before forward().
struct NetWorkspace {
    std::vector<Matrix> act;    // act[h]: n x L_h, h = 0..H
    std::vector<Matrix> delta;  // delta[h]: n x L_h, h = 1..H

    void resize(const DenseNet& net, int n);
};

// Fully connected network with linear output layer.  Weights live in one
// flat vector: for each layer h the L_h x L_{h-1} weight matrix in row-major
// order, immediately followed by the L_h biases.  Keeping the parameters
// flat lets the sampler treat them as a single state vector.
class DenseNet {
public:
    DenseNet(std::vector<int> shape, Activation act);

    int depth() const { return static_cast<int>(shape_.size()) - 1; }
    int input_dim() const { return shape_.front(); }
    int output_dim() const { return shape_.back(); }
    int layer_dim(int h) const { return shape_[h]; }
    const std::vector<int>& shape() const { return shape_; }
    Activation activation() const { return act_; }

    // Number of scalar parameters, and the flat offset of layer h's block.
    int num_weights() const { return offsets_.back(); }
    int offset(int h) const { return offsets_[h - 1]; }

    // He-style initialization: W ~ N(0, 2 / fan_in), biases zero, consumed
    // from the generator in flat layout order.
    void init_weights(Vector& w, CounterRng& rng) const;

    // Forward pass over the batch in ws.act[0]; fills ws.act[1..H].
    // Hidden layers apply the activation, the output layer is linear.
    void forward(const Vector& w, NetWorkspace& ws) const;

    // Backpropagate the seed the caller placed in ws.delta[H] (the gradient
    // of some scalar with respect to the network outputs) down to ws.delta[1].
    void backprop_deltas(const Vector& w, NetWorkspace& ws) const;

    // After backprop_deltas: gradient with respect to the input batch.
    void input_grad(const Vector& w, const NetWorkspace& ws,
                    Eigen::Ref<Matrix> dx) const;

    // After backprop_deltas: gradient with respect to the flat weight vector
    // (overwrites grad).
    void weight_grad(const NetWorkspace& ws, Eigen::Ref<Vector> grad) const;

private:
    std::vector<int> shape_;
    std::vector<int> offsets_;  // offsets_[h-1] = start of layer h, plus total
    Activation act_;

    void apply_activation(Matrix& a) const;
    void apply_activation_grad(const Matrix& a, Matrix& d) const;
};

}  // namespace efi

#endif  // EFI_NETWORK_HPP
