#pragma once

#include <cstdint>
#include <vector>

#include "coxfuse/matrix.hpp"
#include "coxfuse/rng.hpp"

namespace coxfuse::concrete {

// K selection neurons over d input features; alphas stay strictly positive.
struct ConcreteLayer {
    Matrix alphas;  // K x d
    double t0 = 10.0;
    double tb = 0.1;
    std::size_t epochs = 256;

    std::size_t n_neurons() const { return alphas.rows(); }
    std::size_t n_inputs() const { return alphas.cols(); }
};

// alpha rows near-uniform around 1/d with jitter so argmax ties cannot occur.
ConcreteLayer make_concrete_layer(std::size_t n_neurons, std::size_t n_inputs,
                                  double t0, double tb, std::size_t epochs,
                                  Rng& rng);

// g = -log(-log(u)) with u clamped away from {0,1} by 1e-12.
Matrix gumbel_sample(std::size_t rows, std::size_t cols, Rng& rng);

// T(b) = T0 * (TB/T0)^(b/B), exponential decay from t0 to tb.
double temperature(std::size_t b, const ConcreteLayer& layer);

struct ConcreteCache {
    Matrix m;       // selection weights K x d (each row sums to 1)
    Matrix alphas;  // alphas at forward time
    Matrix x;       // input at forward time
    double temp = 1.0;
};

struct ConcreteGrads {
    Matrix alphas;  // d loss / d alpha
    Matrix input;   // d loss / d x
};

// m_i = softmax((log alpha_i + g_i)/temp); output = x * m^T.
void concrete_forward_train(const Matrix& x, const ConcreteLayer& layer,
                            double temp, const Matrix& gumbel, Matrix& out,
                            ConcreteCache& cache);
// Convenience variant drawing fresh Gumbel noise from rng.
Matrix concrete_forward_train(const Matrix& x, const ConcreteLayer& layer,
                              double temp, Rng& rng, ConcreteCache& cache);

// Exact gradients through the softmax reparametrization (cached g).
void concrete_backward(const ConcreteCache& cache, const Matrix& output_grad,
                       ConcreteGrads& grads);

// output column i = input column argmax_j alpha_ij (lowest index on ties).
Matrix concrete_forward_eval(const Matrix& x, const ConcreteLayer& layer);

// argmax per neuron row; duplicates across neurons allowed.
std::vector<std::size_t> selected_features(const ConcreteLayer& layer);

}  // namespace coxfuse::concrete
