#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coxfuse/matrix.hpp"
#include "coxfuse/rng.hpp"

namespace coxfuse::nn {

enum class Activation { relu, identity };

struct DenseLayer {
    Matrix weights;          // fan_in x fan_out
    std::vector<double> bias;
    Activation activation = Activation::identity;
};

struct DenseNetwork {
    std::vector<DenseLayer> layers;

    std::size_t input_width() const { return layers.front().weights.rows(); }
    std::size_t output_width() const { return layers.back().weights.cols(); }
};

struct TrainNoise {
    double dropout_rate = 0.0;  // inverted dropout after hidden activations
    double noise_std = 0.0;     // Gaussian noise added to the input
};

enum class Mode { train, eval };

// Per-layer activations captured by forward for the matching backward.
// Buffers are reused across calls to avoid reallocating every epoch.
struct ForwardCache {
    Matrix input;                    // layer-0 input after any noise
    std::vector<Matrix> pre;         // pre-activations
    std::vector<Matrix> post;        // after activation and dropout
    std::vector<Matrix> drop_scale;  // dropout scale per hidden layer (train)
    Mode mode = Mode::eval;
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;
    Matrix input;  // d loss / d input
};

// Glorot-uniform weights, zero biases.
DenseLayer make_dense_layer(std::size_t fan_in, std::size_t fan_out,
                            Activation activation, Rng& rng);

// Train mode perturbs the input with Gaussian noise (noise.noise_std) and
// applies inverted dropout after every hidden activation; eval mode is a
// pure function of (net, x). Returns the final activation (also cache.post.back()).
const Matrix& forward(const DenseNetwork& net, const Matrix& x, Mode mode,
                      const TrainNoise& noise, Rng& rng, ForwardCache& cache);

Matrix forward_eval(const DenseNetwork& net, const Matrix& x);

// Exact gradients of the cached forward map (same dropout masks).
void backward(const DenseNetwork& net, const ForwardCache& cache,
              const Matrix& output_grad, Gradients& grads);

// loss = sum of squared differences / n_rows; gradient w.r.t. x_hat.
double mse_loss(const Matrix& x, const Matrix& x_hat, Matrix& grad_out);

// lambda * sum of squared Frobenius norms of all weight matrices (no biases).
double l2_penalty(std::span<const DenseNetwork* const> nets, double lambda);

// Adds the matching gradient 2*lambda*W to existing weight gradients.
void add_l2_gradient(const DenseNetwork& net, double lambda, Gradients& grads);

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t step_count = 0;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam_state(std::size_t n_params, double learning_rate);

// Standard bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state);

}  // namespace coxfuse::nn
