#include "coxfuse/concrete.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coxfuse/kernels.hpp"

namespace coxfuse::concrete {

ConcreteLayer make_concrete_layer(std::size_t n_neurons, std::size_t n_inputs,
                                  double t0, double tb, std::size_t epochs,
                                  Rng& rng) {
    if (n_neurons < 1 || n_inputs < 1)
        throw std::invalid_argument("concrete layer needs neurons and inputs");
    if (!(t0 > tb) || !(tb > 0.0))
        throw std::invalid_argument("need t0 > tb > 0");
    ConcreteLayer layer;
    layer.alphas.resize(n_neurons, n_inputs);
    const double base = 1.0 / static_cast<double>(n_inputs);
    for (double& a : layer.alphas.values()) a = rng.uniform(0.9 * base, 1.1 * base);
    layer.t0 = t0;
    layer.tb = tb;
    layer.epochs = epochs;
    return layer;
}

Matrix gumbel_sample(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix g(rows, cols);
    for (double& v : g.values()) v = rng.gumbel();
    return g;
}

double temperature(std::size_t b, const ConcreteLayer& layer) {
    const double frac =
        static_cast<double>(b) / static_cast<double>(layer.epochs);
    return layer.t0 * std::pow(layer.tb / layer.t0, frac);
}

void concrete_forward_train(const Matrix& x, const ConcreteLayer& layer,
                            double temp, const Matrix& gumbel, Matrix& out,
                            ConcreteCache& cache) {
    if (!(temp > 0.0)) throw std::invalid_argument("non-positive temperature");
    const std::size_t k = layer.n_neurons(), d = layer.n_inputs();
    if (x.cols() != d) throw std::invalid_argument("input width mismatch");
    if (gumbel.rows() != k || gumbel.cols() != d)
        throw std::invalid_argument("gumbel shape mismatch");

    cache.m.resize(k, d);
    const double inv_temp = 1.0 / temp;
    for (std::size_t i = 0; i < k; ++i) {
        const double* a = layer.alphas.row(i);
        const double* g = gumbel.row(i);
        double* m = cache.m.row(i);
        double top = -HUGE_VAL;
        for (std::size_t j = 0; j < d; ++j) {
            m[j] = (std::log(a[j]) + g[j]) * inv_temp;
            top = std::max(top, m[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            m[j] = std::exp(m[j] - top);
            sum += m[j];
        }
        const double inv_sum = 1.0 / sum;
        for (std::size_t j = 0; j < d; ++j) m[j] *= inv_sum;
    }
    cache.alphas = layer.alphas;
    cache.x = x;
    cache.temp = temp;
    kernels::matmul_nt(x, cache.m, out);
}

Matrix concrete_forward_train(const Matrix& x, const ConcreteLayer& layer,
                              double temp, Rng& rng, ConcreteCache& cache) {
    Matrix gumbel = gumbel_sample(layer.n_neurons(), layer.n_inputs(), rng);
    Matrix out;
    concrete_forward_train(x, layer, temp, gumbel, out, cache);
    return out;
}

void concrete_backward(const ConcreteCache& cache, const Matrix& output_grad,
                       ConcreteGrads& grads) {
    const std::size_t k = cache.m.rows(), d = cache.m.cols();
    if (output_grad.cols() != k || output_grad.rows() != cache.x.rows())
        throw std::invalid_argument("output grad shape mismatch");

    // d loss / d x = output_grad * m
    kernels::matmul(output_grad, cache.m, grads.input);

    // d loss / d m = output_grad^T * x
    Matrix dm;
    kernels::matmul_tn(output_grad, cache.x, dm);

    // softmax backward per neuron, then chain to alpha:
    // logit_ij = (log alpha_ij + g_ij)/T  =>  d logit/d alpha = 1/(T*alpha)
    grads.alphas.resize(k, d);
    const double inv_temp = 1.0 / cache.temp;
    for (std::size_t i = 0; i < k; ++i) {
        const double* m = cache.m.row(i);
        const double* dmi = dm.row(i);
        const double* a = cache.alphas.row(i);
        double* da = grads.alphas.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += dmi[j] * m[j];
        for (std::size_t j = 0; j < d; ++j) {
            const double dlogit = m[j] * (dmi[j] - dot);
            da[j] = dlogit * inv_temp / a[j];
        }
    }
}

Matrix concrete_forward_eval(const Matrix& x, const ConcreteLayer& layer) {
    if (x.cols() != layer.n_inputs())
        throw std::invalid_argument("input width mismatch");
    const auto picks = selected_features(layer);
    Matrix out(x.rows(), picks.size());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* xr = x.row(r);
        double* orow = out.row(r);
        for (std::size_t i = 0; i < picks.size(); ++i) orow[i] = xr[picks[i]];
    }
    return out;
}

std::vector<std::size_t> selected_features(const ConcreteLayer& layer) {
    std::vector<std::size_t> picks(layer.n_neurons());
    for (std::size_t i = 0; i < layer.n_neurons(); ++i) {
        const double* a = layer.alphas.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < layer.n_inputs(); ++j)
            if (a[j] > a[best]) best = j;  // strict: lowest index wins ties
        picks[i] = best;
    }
    return picks;
}

}  // namespace coxfuse::concrete
