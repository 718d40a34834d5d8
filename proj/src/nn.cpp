#include "coxfuse/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "coxfuse/kernels.hpp"

namespace coxfuse::nn {

DenseLayer make_dense_layer(std::size_t fan_in, std::size_t fan_out,
                            Activation activation, Rng& rng) {
    DenseLayer layer;
    layer.weights.resize(fan_in, fan_out);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : layer.weights.values()) w = rng.uniform(-bound, bound);
    layer.bias.assign(fan_out, 0.0);
    layer.activation = activation;
    return layer;
}

const Matrix& forward(const DenseNetwork& net, const Matrix& x, Mode mode,
                      const TrainNoise& noise, Rng& rng, ForwardCache& cache) {
    if (net.layers.empty()) throw std::invalid_argument("empty network");
    if (x.cols() != net.input_width())
        throw std::invalid_argument("input width mismatch");

    const std::size_t n_layers = net.layers.size();
    cache.mode = mode;
    cache.pre.resize(n_layers);
    cache.post.resize(n_layers);
    cache.drop_scale.resize(n_layers);

    cache.input = x;
    if (mode == Mode::train && noise.noise_std > 0.0)
        for (double& v : cache.input.values()) v += noise.noise_std * rng.normal();

    const Matrix* current = &cache.input;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = net.layers[l];
        Matrix& pre = cache.pre[l];
        kernels::matmul(*current, layer.weights, pre);
        kernels::add_row_vector(pre, layer.bias);

        Matrix& post = cache.post[l];
        post.resize(pre.rows(), pre.cols());
        if (layer.activation == Activation::relu) {
            const auto& src = pre.values();
            auto& dst = post.values();
            for (std::size_t i = 0; i < src.size(); ++i)
                dst[i] = src[i] > 0.0 ? src[i] : 0.0;
        } else {
            post.values() = pre.values();
        }

        const bool hidden = l + 1 < n_layers;
        if (mode == Mode::train && hidden && noise.dropout_rate > 0.0) {
            Matrix& scale = cache.drop_scale[l];
            scale.resize(post.rows(), post.cols());
            const double keep = 1.0 - noise.dropout_rate;
            const double inv_keep = 1.0 / keep;
            auto& sv = scale.values();
            auto& pv = post.values();
            for (std::size_t i = 0; i < sv.size(); ++i) {
                sv[i] = rng.uniform() < keep ? inv_keep : 0.0;
                pv[i] *= sv[i];
            }
        } else {
            cache.drop_scale[l].resize(0, 0);
        }
        current = &post;
    }
    return cache.post.back();
}

Matrix forward_eval(const DenseNetwork& net, const Matrix& x) {
    ForwardCache cache;
    Rng rng(0);  // unused in eval mode
    return forward(net, x, Mode::eval, TrainNoise{}, rng, cache);
}

void backward(const DenseNetwork& net, const ForwardCache& cache,
              const Matrix& output_grad, Gradients& grads) {
    const std::size_t n_layers = net.layers.size();
    if (cache.post.size() != n_layers || cache.post.back().rows() != output_grad.rows())
        throw std::invalid_argument("cache does not match network");

    grads.weights.resize(n_layers);
    grads.bias.resize(n_layers);

    Matrix delta = output_grad;
    for (std::size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        if (!cache.drop_scale[l].empty()) {
            auto& dv = delta.values();
            const auto& sv = cache.drop_scale[l].values();
            for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= sv[i];
        }
        if (layer.activation == Activation::relu) {
            auto& dv = delta.values();
            const auto& pv = cache.pre[l].values();
            for (std::size_t i = 0; i < dv.size(); ++i)
                if (pv[i] <= 0.0) dv[i] = 0.0;
        }

        const Matrix& layer_input = l == 0 ? cache.input : cache.post[l - 1];
        kernels::matmul_tn(layer_input, delta, grads.weights[l]);
        grads.bias[l] = kernels::column_sums(delta);

        if (l > 0) {
            Matrix next;
            kernels::matmul_nt(delta, layer.weights, next);
            delta = std::move(next);
        } else {
            kernels::matmul_nt(delta, layer.weights, grads.input);
        }
    }
}

double mse_loss(const Matrix& x, const Matrix& x_hat, Matrix& grad_out) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
        throw std::invalid_argument("mse shape mismatch");
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    grad_out.resize(x.rows(), x.cols());
    const auto& a = x.values();
    const auto& b = x_hat.values();
    auto& g = grad_out.values();
    double loss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = b[i] - a[i];
        loss += d * d;
        g[i] = 2.0 * d * inv_n;
    }
    return loss * inv_n;
}

double l2_penalty(std::span<const DenseNetwork* const> nets, double lambda) {
    double acc = 0.0;
    for (const DenseNetwork* net : nets)
        for (const DenseLayer& layer : net->layers)
            for (double w : layer.weights.values()) acc += w * w;
    return lambda * acc;
}

void add_l2_gradient(const DenseNetwork& net, double lambda, Gradients& grads) {
    if (lambda == 0.0) return;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& wv = net.layers[l].weights.values();
        auto& gv = grads.weights[l].values();
        for (std::size_t i = 0; i < wv.size(); ++i) gv[i] += 2.0 * lambda * wv[i];
    }
}

AdamState make_adam_state(std::size_t n_params, double learning_rate) {
    AdamState st;
    st.first_moment.assign(n_params, 0.0);
    st.second_moment.assign(n_params, 0.0);
    st.learning_rate = learning_rate;
    return st;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw std::invalid_argument("adam shape mismatch");
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
        v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

}  // namespace coxfuse::nn
