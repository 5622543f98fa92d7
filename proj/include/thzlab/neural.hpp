#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "thzlab/errors.hpp"

namespace thzlab {

enum class Activation { ReLU, ScaledSigmoid, Identity };

struct LayerSpec {
    std::size_t width = 0;
    Activation activation = Activation::ReLU;
    std::vector<double> theta;  // per-output scale, ScaledSigmoid only

    void validate() const {
        if (width < 1) throw InvalidArgument("LayerSpec: width must be >= 1");
        if (activation == Activation::ScaledSigmoid) {
            if (theta.size() != width)
                throw DimensionMismatch("LayerSpec: theta length must equal width");
            for (double t : theta)
                if (!(t > 0.0)) throw InvalidArgument("LayerSpec: theta must be positive");
        }
    }
};

// Numerically stable logistic sigmoid.
inline double stable_sigmoid(double z) {
    if (z >= 0.0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

struct Layer {
    std::vector<double> weights;  // row-major, rows = out, cols = in
    std::vector<double> bias;
    LayerSpec spec;
    std::size_t in_dim = 0;
};

// Fully connected network; a value type, forward/backward are pure.
struct Network {
    std::vector<Layer> layers;
    std::size_t input_dim = 0;
    double input_scale = 1.0;  // divisor applied to raw inputs (e.g. room diagonal)
    bool log_input = false;    // feed log(x/input_scale) instead of x/input_scale

    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().spec.width; }

    void validate() const {
        std::size_t prev = input_dim;
        for (const auto& l : layers) {
            l.spec.validate();
            if (l.in_dim != prev || l.weights.size() != l.spec.width * l.in_dim ||
                l.bias.size() != l.spec.width)
                throw DimensionMismatch("Network: layer dimensions do not chain");
            prev = l.spec.width;
        }
    }
};

// Activation record from a forward pass, consumed by backward().
struct Tape {
    std::vector<std::vector<double>> inputs;  // per layer, post-activation of previous
    std::vector<std::vector<double>> pre;     // per layer, pre-activation z
    std::vector<double> output;
};

inline double apply_activation(Activation act, const std::vector<double>& theta, std::size_t i,
                               double z) {
    switch (act) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::ScaledSigmoid: return theta[i] * stable_sigmoid(z);
        case Activation::Identity: return z;
    }
    return z;
}

inline double activation_derivative(Activation act, const std::vector<double>& theta,
                                    std::size_t i, double z) {
    switch (act) {
        case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
        case Activation::ScaledSigmoid: {
            double s = stable_sigmoid(z);
            return theta[i] * s * (1.0 - s);
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

inline Tape forward(const Network& net, const std::vector<double>& x) {
    if (x.size() != net.input_dim)
        throw DimensionMismatch("forward: input length != input_dim");
    Tape tape;
    std::vector<double> cur(x);
    for (auto& v : cur) {
        v /= net.input_scale;
        if (net.log_input) {
            if (!(v > 0.0))
                throw InvalidArgument("forward: log_input requires positive inputs");
            v = std::log(v);
        }
    }
    for (const auto& layer : net.layers) {
        tape.inputs.push_back(cur);
        std::vector<double> z(layer.spec.width);
        for (std::size_t r = 0; r < layer.spec.width; ++r) {
            double acc = layer.bias[r];
            const double* wrow = layer.weights.data() + r * layer.in_dim;
            for (std::size_t c = 0; c < layer.in_dim; ++c) acc += wrow[c] * cur[c];
            z[r] = acc;
        }
        tape.pre.push_back(z);
        std::vector<double> out(layer.spec.width);
        for (std::size_t r = 0; r < layer.spec.width; ++r)
            out[r] = apply_activation(layer.spec.activation, layer.spec.theta, r, z[r]);
        cur = std::move(out);
    }
    tape.output = cur;
    return tape;
}

struct Gradients {
    std::vector<std::vector<double>> d_weights;  // same shapes as layers
    std::vector<std::vector<double>> d_bias;

    static Gradients zeros_like(const Network& net) {
        Gradients g;
        for (const auto& l : net.layers) {
            g.d_weights.emplace_back(l.weights.size(), 0.0);
            g.d_bias.emplace_back(l.bias.size(), 0.0);
        }
        return g;
    }

    void accumulate(const Gradients& other, double scale = 1.0) {
        for (std::size_t l = 0; l < d_weights.size(); ++l) {
            for (std::size_t i = 0; i < d_weights[l].size(); ++i)
                d_weights[l][i] += scale * other.d_weights[l][i];
            for (std::size_t i = 0; i < d_bias[l].size(); ++i)
                d_bias[l][i] += scale * other.d_bias[l][i];
        }
    }
};

// Vector-Jacobian product: gradient of dL_dy . y with respect to all parameters.
inline Gradients backward(const Network& net, const Tape& tape,
                          const std::vector<double>& dL_dy) {
    if (dL_dy.size() != net.output_dim())
        throw DimensionMismatch("backward: seed length != output_dim");
    Gradients g = Gradients::zeros_like(net);
    std::vector<double> delta(dL_dy);
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Layer& layer = net.layers[li];
        const auto& z = tape.pre[li];
        const auto& in = tape.inputs[li];
        // delta through the activation
        for (std::size_t r = 0; r < layer.spec.width; ++r)
            delta[r] *= activation_derivative(layer.spec.activation, layer.spec.theta, r, z[r]);
        for (std::size_t r = 0; r < layer.spec.width; ++r) {
            g.d_bias[li][r] = delta[r];
            double* grow = g.d_weights[li].data() + r * layer.in_dim;
            for (std::size_t c = 0; c < layer.in_dim; ++c) grow[c] = delta[r] * in[c];
        }
        if (li == 0) break;
        std::vector<double> prev(layer.in_dim, 0.0);
        for (std::size_t r = 0; r < layer.spec.width; ++r) {
            const double* wrow = layer.weights.data() + r * layer.in_dim;
            for (std::size_t c = 0; c < layer.in_dim; ++c) prev[c] += wrow[c] * delta[r];
        }
        delta = std::move(prev);
    }
    return g;
}

enum class InitScheme { PaperGaussian, Scaled };

inline Network init_network(const std::vector<LayerSpec>& arch, std::size_t input_dim,
                            std::uint64_t seed, InitScheme scheme = InitScheme::PaperGaussian) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Network net;
    net.input_dim = input_dim;
    std::size_t prev = input_dim;
    for (const auto& spec : arch) {
        spec.validate();
        Layer layer;
        layer.spec = spec;
        layer.in_dim = prev;
        layer.weights.resize(spec.width * prev);
        double sigma = scheme == InitScheme::PaperGaussian
                           ? 1.0
                           : std::sqrt(2.0 / static_cast<double>(prev));
        for (auto& w : layer.weights) w = sigma * normal(rng);
        layer.bias.assign(spec.width, 0.0);
        net.layers.push_back(std::move(layer));
        prev = spec.width;
    }
    net.validate();
    return net;
}

// The architecture of the learning model: 100-100-50-25 ReLU plus a scaled
// sigmoid output split into n_s power and n_s bandwidth scales.
inline std::vector<LayerSpec> paper_architecture(std::size_t n_s, double p_max, double b_max) {
    std::vector<double> theta(2 * n_s);
    for (std::size_t i = 0; i < n_s; ++i) theta[i] = p_max;
    for (std::size_t i = n_s; i < 2 * n_s; ++i) theta[i] = b_max;
    return {
        {100, Activation::ReLU, {}},
        {100, Activation::ReLU, {}},
        {50, Activation::ReLU, {}},
        {25, Activation::ReLU, {}},
        {2 * n_s, Activation::ScaledSigmoid, std::move(theta)},
    };
}

// ---------------------------------------------------------------------------
// Checkpoint JSON
// ---------------------------------------------------------------------------

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers) {
        nlohmann::json jl;
        jl["width"] = l.spec.width;
        jl["in_dim"] = l.in_dim;
        switch (l.spec.activation) {
            case Activation::ReLU: jl["activation"] = "relu"; break;
            case Activation::ScaledSigmoid: jl["activation"] = "scaled_sigmoid"; break;
            case Activation::Identity: jl["activation"] = "identity"; break;
        }
        if (!l.spec.theta.empty()) jl["theta"] = l.spec.theta;
        jl["weights"] = l.weights;  // row-major
        jl["bias"] = l.bias;
        layers.push_back(std::move(jl));
    }
    return nlohmann::json{{"input_dim", net.input_dim},
                          {"input_scale", net.input_scale},
                          {"log_input", net.log_input},
                          {"layers", std::move(layers)}};
}

inline Network network_from_json(const nlohmann::json& j) {
    Network net;
    net.input_dim = j.at("input_dim");
    net.input_scale = j.value("input_scale", 1.0);
    net.log_input = j.value("log_input", false);
    for (const auto& jl : j.at("layers")) {
        Layer l;
        l.spec.width = jl.at("width");
        l.in_dim = jl.at("in_dim");
        const std::string act = jl.at("activation");
        if (act == "relu") l.spec.activation = Activation::ReLU;
        else if (act == "scaled_sigmoid") l.spec.activation = Activation::ScaledSigmoid;
        else if (act == "identity") l.spec.activation = Activation::Identity;
        else throw InvalidArgument("network_from_json: unknown activation " + act);
        if (jl.contains("theta")) l.spec.theta = jl.at("theta").get<std::vector<double>>();
        l.weights = jl.at("weights").get<std::vector<double>>();
        l.bias = jl.at("bias").get<std::vector<double>>();
        net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
}

}  // namespace thzlab
