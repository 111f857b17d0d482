#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fedgan/matrix.hpp"
#include "fedgan/rng.hpp"

namespace fedgan {

enum class Activation : std::uint32_t { Identity = 0, Relu = 1, Tanh = 2, Sigmoid = 3 };

std::string_view to_string(Activation act);
Activation activation_from_string(std::string_view name);

/// One dense layer: y = act(x * weight + bias), weight is in x out.
struct Layer {
    Matrix weight;
    std::vector<double> bias;
    Activation activation = Activation::Identity;

    std::size_t in() const { return weight.rows(); }
    std::size_t out() const { return weight.cols(); }

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Stack of dense layers. Every mutation takes a fresh stamp, which is how
/// backward() detects a tape recorded against older parameters.
class DenseNet {
public:
    DenseNet() = default;
    explicit DenseNet(std::vector<Layer> layers);

    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t depth() const { return layers_.size(); }
    std::size_t input_width() const;
    std::size_t output_width() const;
    std::size_t parameter_count() const;

    void set_layer(std::size_t index, Layer layer);

    /// All weights then biases, layer by layer.
    std::vector<double> flatten() const;
    void assign_flat(std::span<const double> values);

    /// Applies `fn(double& param, std::size_t flat_index)` to every parameter
    /// in flatten() order.
    template <typename Fn>
    void update_each(Fn&& fn) {
        std::size_t k = 0;
        for (auto& layer : layers_) {
            for (double& w : layer.weight.values()) fn(w, k++);
            for (double& b : layer.bias) fn(b, k++);
        }
        restamp();
    }

    std::uint64_t stamp() const { return stamp_; }

    /// Same architecture: layer count, widths, activations.
    bool same_shape(const DenseNet& other) const;

    friend bool operator==(const DenseNet& a, const DenseNet& b) { return a.layers_ == b.layers_; }

private:
    void restamp();

    std::vector<Layer> layers_;
    std::uint64_t stamp_ = 0;
};

struct LayerShape {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation activation = Activation::Identity;
};

/// Glorot-uniform weights, zero biases.
DenseNet init_dense(std::span<const LayerShape> shapes, Rng& rng);

/// input -> hidden... (hidden_act) -> output (output_act)
DenseNet make_mlp(std::size_t input, std::span<const std::size_t> hidden, std::size_t output,
                  Activation hidden_act, Activation output_act, Rng& rng);

/// Activations recorded by forward(); activations[i] is the input of layer i and
/// activations.back() is the network output.
struct Tape {
    std::uint64_t stamp = 0;
    std::vector<Matrix> activations;
};

struct ForwardResult {
    Matrix output;
    Tape tape;
};

ForwardResult forward(const DenseNet& net, const Matrix& batch);

/// forward() without keeping a tape.
Matrix predict(const DenseNet& net, const Matrix& batch);

struct LayerGrad {
    Matrix weight;
    std::vector<double> bias;
};

struct Gradients {
    std::vector<LayerGrad> layers;
    /// Gradient with respect to the batch fed to forward().
    Matrix input;

    bool all_finite() const;
};

Gradients backward(const DenseNet& net, const Tape& tape, const Matrix& output_grad);

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
};

/// Zeroed moments sized for `net`. Throws ConfigError on invalid hyperparameters.
AdamState make_adam(const DenseNet& net, const AdamConfig& config);

/// One bias-corrected Adam descent step. Leaves net and state untouched if any
/// gradient entry is non-finite.
void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

}  // namespace fedgan
