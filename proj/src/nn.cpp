#include "fedgan/nn.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "fedgan/error.hpp"

namespace fedgan {

namespace {

std::atomic<std::uint64_t> g_stamp{1};

std::uint64_t fresh_stamp() { return g_stamp.fetch_add(1, std::memory_order_relaxed); }

void apply_activation(Matrix& z, Activation act) {
    switch (act) {
        case Activation::Identity:
            break;
        case Activation::Relu:
            for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Tanh:
            for (double& v : z.values()) v = std::tanh(v);
            break;
        case Activation::Sigmoid:
            for (double& v : z.values()) v = 1.0 / (1.0 + std::exp(-v));
            break;
    }
}

// grad <- grad * act'(z), expressed through the post-activation value y.
void multiply_activation_grad(Matrix& grad, const Matrix& y, Activation act) {
    auto g = grad.values();
    auto out = y.values();
    switch (act) {
        case Activation::Identity:
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = out[i] > 0.0 ? g[i] : 0.0;
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - out[i] * out[i];
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= out[i] * (1.0 - out[i]);
            break;
    }
}

Matrix affine(const Layer& layer, const Matrix& x) {
    Matrix z = matmul(x, layer.weight);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
    }
    return z;
}

void check_input(const DenseNet& net, const Matrix& batch) {
    if (net.depth() == 0) {
        throw DimensionError("network has no layers");
    }
    if (batch.cols() != net.input_width()) {
        throw DimensionError("layer 0 expects input width " + std::to_string(net.input_width()) +
                             ", batch has " + std::to_string(batch.cols()) + " columns");
    }
}

}  // namespace

std::string_view to_string(Activation act) {
    switch (act) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "unknown";
}

Activation activation_from_string(std::string_view name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

DenseNet::DenseNet(std::vector<Layer> layers) : layers_(std::move(layers)), stamp_(fresh_stamp()) {
    if (layers_.empty()) {
        throw DimensionError("a network needs at least one layer");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.bias.size() != l.out()) {
            throw DimensionError("layer " + std::to_string(i) + " bias length " +
                                 std::to_string(l.bias.size()) + " != output width " +
                                 std::to_string(l.out()));
        }
        if (i > 0 && layers_[i - 1].out() != l.in()) {
            throw DimensionError("layer " + std::to_string(i) + " input width " +
                                 std::to_string(l.in()) + " != layer " + std::to_string(i - 1) +
                                 " output width " + std::to_string(layers_[i - 1].out()));
        }
    }
}

std::size_t DenseNet::input_width() const { return layers_.empty() ? 0 : layers_.front().in(); }
std::size_t DenseNet::output_width() const { return layers_.empty() ? 0 : layers_.back().out(); }

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

void DenseNet::set_layer(std::size_t index, Layer layer) {
    if (index >= layers_.size()) {
        throw DimensionError("layer index " + std::to_string(index) + " out of range");
    }
    const auto& old = layers_[index];
    if (layer.in() != old.in() || layer.out() != old.out() || layer.bias.size() != old.out()) {
        throw DimensionError("layer " + std::to_string(index) + " replacement changes its shape");
    }
    layers_[index] = std::move(layer);
    restamp();
}

std::vector<double> DenseNet::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.weight.data().begin(), l.weight.data().end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void DenseNet::assign_flat(std::span<const double> values) {
    if (values.size() != parameter_count()) {
        throw DimensionError("flat parameter vector has " + std::to_string(values.size()) +
                             " entries, network has " + std::to_string(parameter_count()));
    }
    update_each([&](double& p, std::size_t k) { p = values[k]; });
}

bool DenseNet::same_shape(const DenseNet& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& a = layers_[i];
        const auto& b = other.layers_[i];
        if (a.in() != b.in() || a.out() != b.out() || a.activation != b.activation) return false;
    }
    return true;
}

void DenseNet::restamp() { stamp_ = fresh_stamp(); }

DenseNet init_dense(std::span<const LayerShape> shapes, Rng& rng) {
    std::vector<Layer> layers;
    layers.reserve(shapes.size());
    for (const auto& s : shapes) {
        const double bound = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Layer layer{Matrix(s.in, s.out), std::vector<double>(s.out, 0.0), s.activation};
        for (double& w : layer.weight.values()) w = dist(rng);
        layers.push_back(std::move(layer));
    }
    return DenseNet(std::move(layers));
}

DenseNet make_mlp(std::size_t input, std::span<const std::size_t> hidden, std::size_t output,
                  Activation hidden_act, Activation output_act, Rng& rng) {
    std::vector<LayerShape> shapes;
    std::size_t prev = input;
    for (std::size_t h : hidden) {
        shapes.push_back({prev, h, hidden_act});
        prev = h;
    }
    shapes.push_back({prev, output, output_act});
    return init_dense(shapes, rng);
}

ForwardResult forward(const DenseNet& net, const Matrix& batch) {
    check_input(net, batch);
    ForwardResult result;
    result.tape.stamp = net.stamp();
    result.tape.activations.reserve(net.depth() + 1);
    result.tape.activations.push_back(batch);
    for (const auto& layer : net.layers()) {
        Matrix z = affine(layer, result.tape.activations.back());
        apply_activation(z, layer.activation);
        result.tape.activations.push_back(std::move(z));
    }
    result.output = result.tape.activations.back();
    return result;
}

Matrix predict(const DenseNet& net, const Matrix& batch) {
    check_input(net, batch);
    Matrix x = affine(net.layers().front(), batch);
    apply_activation(x, net.layers().front().activation);
    for (std::size_t i = 1; i < net.depth(); ++i) {
        Matrix z = affine(net.layers()[i], x);
        apply_activation(z, net.layers()[i].activation);
        x = std::move(z);
    }
    return x;
}

bool Gradients::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weight.all_finite()) return false;
        for (double b : l.bias) {
            if (!std::isfinite(b)) return false;
        }
    }
    return true;
}

Gradients backward(const DenseNet& net, const Tape& tape, const Matrix& output_grad) {
    if (tape.stamp != net.stamp() || tape.activations.size() != net.depth() + 1) {
        throw InvalidTapeError("tape was not recorded against the current network parameters");
    }
    const Matrix& out = tape.activations.back();
    if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
        throw DimensionError("output gradient shape does not match network output");
    }
    Gradients grads;
    grads.layers.resize(net.depth());
    Matrix delta = output_grad;
    for (std::size_t i = net.depth(); i-- > 0;) {
        const Layer& layer = net.layers()[i];
        multiply_activation_grad(delta, tape.activations[i + 1], layer.activation);
        const Matrix& x = tape.activations[i];
        auto& g = grads.layers[i];
        g.weight = matmul_at(x, delta);
        g.bias.assign(layer.out(), 0.0);
        for (std::size_t r = 0; r < delta.rows(); ++r) {
            const auto row = delta.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) g.bias[c] += row[c];
        }
        delta = matmul_bt(delta, layer.weight);
    }
    grads.input = std::move(delta);
    return grads;
}

AdamState make_adam(const DenseNet& net, const AdamConfig& config) {
    if (!(config.beta1 > 0.0 && config.beta1 < 1.0) || !(config.beta2 > 0.0 && config.beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in (0,1)");
    }
    if (!(config.epsilon > 0.0) || !(config.learning_rate > 0.0)) {
        throw ConfigError("Adam epsilon and learning rate must be positive");
    }
    AdamState state;
    state.config = config;
    state.m.assign(net.parameter_count(), 0.0);
    state.v.assign(net.parameter_count(), 0.0);
    return state;
}

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state) {
    if (grads.layers.size() != net.depth()) {
        throw DimensionError("gradient layer count does not match network");
    }
    for (std::size_t i = 0; i < net.depth(); ++i) {
        const auto& l = net.layers()[i];
        const auto& g = grads.layers[i];
        if (g.weight.rows() != l.in() || g.weight.cols() != l.out() || g.bias.size() != l.out()) {
            throw DimensionError("gradient shape mismatch at layer " + std::to_string(i));
        }
    }
    if (state.m.size() != net.parameter_count() || state.v.size() != net.parameter_count()) {
        throw DimensionError("Adam state does not match network size");
    }
    if (!grads.all_finite()) {
        throw NumericError("non-finite gradient entry; Adam step rejected");
    }

    std::vector<double> flat_grad;
    flat_grad.reserve(net.parameter_count());
    for (const auto& g : grads.layers) {
        flat_grad.insert(flat_grad.end(), g.weight.data().begin(), g.weight.data().end());
        flat_grad.insert(flat_grad.end(), g.bias.begin(), g.bias.end());
    }

    const auto& c = state.config;
    const double t = static_cast<double>(state.step + 1);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    net.update_each([&](double& p, std::size_t k) {
        const double g = flat_grad[k];
        state.m[k] = c.beta1 * state.m[k] + (1.0 - c.beta1) * g;
        state.v[k] = c.beta2 * state.v[k] + (1.0 - c.beta2) * g * g;
        const double m_hat = state.m[k] / correction1;
        const double v_hat = state.v[k] / correction2;
        p -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    });
    state.step += 1;
}

}  // namespace fedgan
