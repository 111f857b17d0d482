#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "fedgan/nn.hpp"

namespace fedgan::testing {

inline double apply(Activation act, double x) {
    switch (act) {
        case Activation::Identity: return x;
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

/// Per-element re-evaluation of a dense net, written independently of forward().
inline Matrix naive_forward(const DenseNet& net, const Matrix& batch) {
    Matrix cur = batch;
    for (const Layer& layer : net.layers()) {
        Matrix next(cur.rows(), layer.out());
        for (std::size_t r = 0; r < cur.rows(); ++r) {
            for (std::size_t j = 0; j < layer.out(); ++j) {
                double z = layer.bias[j];
                for (std::size_t i = 0; i < layer.in(); ++i) z += cur(r, i) * layer.weight(i, j);
                next(r, j) = apply(layer.activation, z);
            }
        }
        cur = std::move(next);
    }
    return cur;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = dist(rng);
    return m;
}

/// Random net with 1..3 layers of width <= 16 and small random biases.
inline DenseNet random_net(Rng& rng, bool smooth_only) {
    std::uniform_int_distribution<std::size_t> depth_dist(1, 3);
    std::uniform_int_distribution<std::size_t> width_dist(1, 16);
    std::uniform_int_distribution<int> act_dist(0, smooth_only ? 2 : 3);
    const Activation smooth[] = {Activation::Identity, Activation::Tanh, Activation::Sigmoid};
    const Activation all[] = {Activation::Identity, Activation::Relu, Activation::Tanh,
                              Activation::Sigmoid};
    const std::size_t depth = depth_dist(rng);
    std::vector<LayerShape> shapes;
    std::size_t in = width_dist(rng);
    for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t out = width_dist(rng);
        const Activation act = smooth_only ? smooth[act_dist(rng)] : all[act_dist(rng)];
        shapes.push_back({in, out, act});
        in = out;
    }
    DenseNet net = init_dense(shapes, rng);
    std::normal_distribution<double> bias(0.0, 0.3);
    net.update_each([&](double& p, std::size_t) { p += 0.1 * bias(rng); });
    return net;
}

/// Central differences of `loss` around the current parameters of `net`.
inline std::vector<double> numeric_param_grad(const DenseNet& net,
                                              const std::function<double(const DenseNet&)>& loss,
                                              double step = 1e-5) {
    const std::vector<double> base = net.flatten();
    std::vector<double> grad(base.size());
    DenseNet probe = net;
    std::vector<double> p = base;
    for (std::size_t k = 0; k < base.size(); ++k) {
        p[k] = base[k] + step;
        probe.assign_flat(p);
        const double up = loss(probe);
        p[k] = base[k] - step;
        probe.assign_flat(p);
        const double down = loss(probe);
        p[k] = base[k];
        grad[k] = (up - down) / (2.0 * step);
    }
    return grad;
}

inline std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (const auto& layer : g.layers) {
        out.insert(out.end(), layer.weight.values().begin(), layer.weight.values().end());
        out.insert(out.end(), layer.bias.begin(), layer.bias.end());
    }
    return out;
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

}  // namespace fedgan::testing
