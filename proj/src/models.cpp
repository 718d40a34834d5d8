#include "coxfuse/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coxfuse/errors.hpp"
#include "coxfuse/kernels.hpp"
#include "coxfuse/linalg.hpp"
#include "coxfuse/nn.hpp"
#include "coxfuse/rng.hpp"
#include "coxfuse/survival.hpp"

namespace coxfuse::models {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::pca: return "pca";
        case ModelKind::ae: return "ae";
        case ModelKind::sae: return "sae";
        case ModelKind::csae: return "csae";
    }
    throw std::logic_error("bad model kind");
}

ModelKind kind_from_string(const std::string& name) {
    if (name == "pca") return ModelKind::pca;
    if (name == "ae") return ModelKind::ae;
    if (name == "sae") return ModelKind::sae;
    if (name == "csae") return ModelKind::csae;
    throw ConfigError("unknown model kind: " + name);
}

namespace {

constexpr int kFormatVersion = 1;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.size()) throw ConfigError("matrix payload size mismatch");
    m.values() = data;
    return m;
}

json net_to_json(const nn::DenseNetwork& net) {
    json layers = json::array();
    for (const auto& layer : net.layers) {
        layers.push_back(
            {{"weights", matrix_to_json(layer.weights)},
             {"bias", layer.bias},
             {"activation",
              layer.activation == nn::Activation::relu ? "relu" : "identity"}});
    }
    return json{{"layers", layers}};
}

nn::DenseNetwork net_from_json(const json& j) {
    nn::DenseNetwork net;
    for (const auto& lj : j.at("layers")) {
        nn::DenseLayer layer;
        layer.weights = matrix_from_json(lj.at("weights"));
        layer.bias = lj.at("bias").get<std::vector<double>>();
        const auto act = lj.at("activation").get<std::string>();
        if (act == "relu")
            layer.activation = nn::Activation::relu;
        else if (act == "identity")
            layer.activation = nn::Activation::identity;
        else
            throw ConfigError("unknown activation: " + act);
        net.layers.push_back(std::move(layer));
    }
    if (net.layers.empty()) throw ConfigError("network has no layers");
    return net;
}

void check_version(const json& j) {
    if (j.at("format_version").get<int>() != kFormatVersion)
        throw ConfigError("unsupported model format_version");
}

// One Adam state per tensor, tensors ordered (w0, b0, w1, b1, ...).
struct NetOptimizer {
    std::vector<nn::AdamState> states;

    void init(const nn::DenseNetwork& net, double lr) {
        states.clear();
        for (const auto& layer : net.layers) {
            states.push_back(nn::make_adam_state(layer.weights.size(), lr));
            states.push_back(nn::make_adam_state(layer.bias.size(), lr));
        }
    }

    void step(nn::DenseNetwork& net, const nn::Gradients& grads) {
        std::size_t s = 0;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            nn::adam_step(net.layers[l].weights.values(), grads.weights[l].values(),
                          states[s++]);
            nn::adam_step(net.layers[l].bias, grads.bias[l], states[s++]);
        }
    }
};

void check_finite_loss(double loss, std::size_t epoch) {
    if (!std::isfinite(loss))
        throw DataError("non-finite loss at epoch " + std::to_string(epoch));
}

// |W1 * W2 * ...| as an F x d attribution matrix for a pyramidal encoder.
Matrix path_weight_importance(const nn::DenseNetwork& encoder) {
    Matrix product = encoder.layers.front().weights;
    for (std::size_t l = 1; l < encoder.layers.size(); ++l) {
        Matrix next;
        kernels::matmul(product, encoder.layers[l].weights, next);
        product = std::move(next);
    }
    Matrix imp(product.cols(), product.rows());
    for (std::size_t i = 0; i < imp.rows(); ++i)
        for (std::size_t j = 0; j < imp.cols(); ++j)
            imp(i, j) = std::abs(product(j, i));
    return imp;
}

class PcaModel final : public FingerprintModel {
public:
    ModelKind kind() const override { return ModelKind::pca; }
    std::size_t n_fingerprints() const override { return components_.cols(); }

    void fit(const Matrix& x, const data::SurvivalLabels&, const ModelConfig& cfg,
             std::uint64_t) override {
        const std::size_t n = x.rows(), d = x.cols();
        if (n < 2) throw std::invalid_argument("pca needs at least 2 rows");
        mean_ = kernels::column_means(x);
        Matrix xc = x;
        std::vector<double> ones(d, 1.0);
        kernels::shift_scale_columns(xc, mean_, ones);

        const double inv_n = 1.0 / static_cast<double>(n);
        std::size_t f_eff = std::min(cfg.n_fingerprints, std::min(d, n - 1));

        if (d <= n) {
            Matrix cov;
            kernels::matmul_tn(xc, xc, cov);
            for (double& v : cov.values()) v *= inv_n;
            auto eig = linalg::jacobi_eigen_symmetric(cov);
            components_.resize(d, f_eff);
            explained_.assign(eig.values.begin(), eig.values.begin() + f_eff);
            for (std::size_t c = 0; c < f_eff; ++c)
                for (std::size_t r = 0; r < d; ++r)
                    components_(r, c) = eig.vectors(r, c);
        } else {
            Matrix gram;
            kernels::matmul_nt(xc, xc, gram);
            for (double& v : gram.values()) v *= inv_n;
            auto eig = linalg::jacobi_eigen_symmetric(gram);
            const double lead = std::max(eig.values.empty() ? 0.0 : eig.values[0], 0.0);
            std::size_t positive = 0;
            while (positive < eig.values.size() &&
                   eig.values[positive] > std::max(1e-12 * lead, 1e-300))
                ++positive;
            f_eff = std::min(f_eff, positive);
            components_.resize(d, f_eff);
            explained_.assign(eig.values.begin(), eig.values.begin() + f_eff);
            for (std::size_t c = 0; c < f_eff; ++c) {
                // right singular vector: X^T u / ||X^T u||, ||X^T u|| = sqrt(n*lambda)
                const double inv_norm =
                    1.0 / std::sqrt(eig.values[c] * static_cast<double>(n));
                for (std::size_t r = 0; r < d; ++r) {
                    double acc = 0.0;
                    for (std::size_t s = 0; s < n; ++s)
                        acc += xc(s, r) * eig.vectors(s, c);
                    components_(r, c) = acc * inv_norm;
                }
            }
        }

        // deterministic orientation: the largest-magnitude entry is positive
        for (std::size_t c = 0; c < components_.cols(); ++c) {
            std::size_t arg = 0;
            for (std::size_t r = 1; r < components_.rows(); ++r)
                if (std::abs(components_(r, c)) > std::abs(components_(arg, c))) arg = r;
            if (components_(arg, c) < 0.0)
                for (std::size_t r = 0; r < components_.rows(); ++r)
                    components_(r, c) = -components_(r, c);
        }
        fitted_ = true;
    }

    Matrix transform(const Matrix& x) const override {
        require_fitted();
        if (x.cols() != mean_.size())
            throw std::invalid_argument("transform width mismatch");
        Matrix xc = x;
        std::vector<double> ones(mean_.size(), 1.0);
        kernels::shift_scale_columns(xc, mean_, ones);
        Matrix out;
        kernels::matmul(xc, components_, out);
        return out;
    }

    Matrix importance() const override {
        require_fitted();
        Matrix imp(components_.cols(), components_.rows());
        for (std::size_t i = 0; i < imp.rows(); ++i)
            for (std::size_t j = 0; j < imp.cols(); ++j)
                imp(i, j) = std::abs(components_(j, i));
        return imp;
    }

    const FitTrace& trace() const override { return trace_; }

    json to_json() const override {
        require_fitted();
        return json{{"format_version", kFormatVersion},
                    {"kind", "pca"},
                    {"mean", mean_},
                    {"components", matrix_to_json(components_)},
                    {"explained_variance", explained_}};
    }

    void load(const json& j) {
        mean_ = j.at("mean").get<std::vector<double>>();
        components_ = matrix_from_json(j.at("components"));
        explained_ = j.at("explained_variance").get<std::vector<double>>();
        fitted_ = true;
    }

private:
    void require_fitted() const {
        if (!fitted_) throw std::logic_error("model not fitted");
    }

    std::vector<double> mean_;
    Matrix components_;  // d x F_eff
    std::vector<double> explained_;
    FitTrace trace_;
    bool fitted_ = false;
};

class AutoencoderModel : public FingerprintModel {
public:
    explicit AutoencoderModel(bool supervised) : supervised_(supervised) {}

    ModelKind kind() const override {
        return supervised_ ? ModelKind::sae : ModelKind::ae;
    }
    std::size_t n_fingerprints() const override { return encoder_.output_width(); }

    void fit(const Matrix& x, const data::SurvivalLabels& labels,
             const ModelConfig& cfg, std::uint64_t seed) override {
        const std::size_t d = x.cols();
        if (supervised_) {
            if (labels.size() != x.rows())
                throw std::invalid_argument("label length mismatch");
            if (labels.n_events() == 0) throw DataError("no events");
        }
        Rng rng(seed);
        encoder_.layers = {
            nn::make_dense_layer(d, cfg.hidden, nn::Activation::relu, rng),
            nn::make_dense_layer(cfg.hidden, cfg.n_fingerprints,
                                 nn::Activation::identity, rng)};
        decoder_.layers = {
            nn::make_dense_layer(cfg.n_fingerprints, cfg.hidden,
                                 nn::Activation::relu, rng),
            nn::make_dense_layer(cfg.hidden, d, nn::Activation::identity, rng)};
        if (supervised_)
            head_.layers = {nn::make_dense_layer(cfg.n_fingerprints, 1,
                                                 nn::Activation::identity, rng)};

        NetOptimizer enc_opt, dec_opt, head_opt;
        enc_opt.init(encoder_, cfg.learning_rate);
        dec_opt.init(decoder_, cfg.learning_rate);
        if (supervised_) head_opt.init(head_, cfg.learning_rate);

        const nn::TrainNoise enc_noise{cfg.dropout, cfg.noise_std};
        const nn::TrainNoise dec_noise{cfg.dropout, 0.0};
        std::vector<const nn::DenseNetwork*> nets{&encoder_, &decoder_};
        if (supervised_) nets.push_back(&head_);

        nn::ForwardCache enc_cache, dec_cache, head_cache;
        nn::Gradients enc_grads, dec_grads, head_grads;
        Matrix mse_grad, log_h;
        std::vector<double> lh_vec(x.rows());
        trace_ = FitTrace{};

        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            const Matrix& z =
                nn::forward(encoder_, x, nn::Mode::train, enc_noise, rng, enc_cache);
            const Matrix& x_hat =
                nn::forward(decoder_, z, nn::Mode::train, dec_noise, rng, dec_cache);
            const double rec = nn::mse_loss(x, x_hat, mse_grad);
            nn::backward(decoder_, dec_cache, mse_grad, dec_grads);

            double cox = 0.0;
            if (supervised_) {
                const Matrix& lh = nn::forward(head_, z, nn::Mode::train,
                                               nn::TrainNoise{}, rng, head_cache);
                for (std::size_t r = 0; r < x.rows(); ++r) lh_vec[r] = lh(r, 0);
                surv::CoxLoss cl = surv::cox_neural_loss(lh_vec, labels);
                cox = cl.loss;
                log_h.resize(x.rows(), 1);
                for (std::size_t r = 0; r < x.rows(); ++r) log_h(r, 0) = cl.grad[r];
                nn::backward(head_, head_cache, log_h, head_grads);
            }

            const double l2 = nn::l2_penalty(nets, cfg.l2_lambda);
            const double total = rec + cox + l2;
            check_finite_loss(total, epoch);
            trace_.total.push_back(total);
            trace_.reconstruction.push_back(rec);
            trace_.cox.push_back(cox);

            Matrix dz = dec_grads.input;
            if (supervised_) {
                auto& dzv = dz.values();
                const auto& hv = head_grads.input.values();
                for (std::size_t i = 0; i < dzv.size(); ++i) dzv[i] += hv[i];
            }
            nn::backward(encoder_, enc_cache, dz, enc_grads);

            nn::add_l2_gradient(encoder_, cfg.l2_lambda, enc_grads);
            nn::add_l2_gradient(decoder_, cfg.l2_lambda, dec_grads);
            if (supervised_) nn::add_l2_gradient(head_, cfg.l2_lambda, head_grads);

            enc_opt.step(encoder_, enc_grads);
            dec_opt.step(decoder_, dec_grads);
            if (supervised_) head_opt.step(head_, head_grads);
        }
        fitted_ = true;
    }

    Matrix transform(const Matrix& x) const override {
        require_fitted();
        return nn::forward_eval(encoder_, x);
    }

    Matrix importance() const override {
        require_fitted();
        return path_weight_importance(encoder_);
    }

    const FitTrace& trace() const override { return trace_; }

    json to_json() const override {
        require_fitted();
        json j{{"format_version", kFormatVersion},
               {"kind", supervised_ ? "sae" : "ae"},
               {"encoder", net_to_json(encoder_)},
               {"decoder", net_to_json(decoder_)}};
        if (supervised_) j["head"] = net_to_json(head_);
        return j;
    }

    void load(const json& j) {
        encoder_ = net_from_json(j.at("encoder"));
        decoder_ = net_from_json(j.at("decoder"));
        if (supervised_) head_ = net_from_json(j.at("head"));
        fitted_ = true;
    }

private:
    void require_fitted() const {
        if (!fitted_) throw std::logic_error("model not fitted");
    }

    bool supervised_;
    nn::DenseNetwork encoder_, decoder_, head_;
    FitTrace trace_;
    bool fitted_ = false;
};

class CsaeModel final : public FingerprintModel {
public:
    ModelKind kind() const override { return ModelKind::csae; }
    std::size_t n_fingerprints() const override { return layer_.n_neurons(); }

    void fit(const Matrix& x, const data::SurvivalLabels& labels,
             const ModelConfig& cfg, std::uint64_t seed) override {
        const std::size_t n = x.rows(), d = x.cols();
        if (labels.size() != n) throw std::invalid_argument("label length mismatch");
        if (labels.n_events() == 0) throw DataError("no events");

        Rng rng(seed);
        layer_ = concrete::make_concrete_layer(cfg.n_fingerprints, d, cfg.t0, cfg.tb,
                                               cfg.epochs, rng);
        decoder_.layers = {
            nn::make_dense_layer(cfg.n_fingerprints, cfg.hidden,
                                 nn::Activation::relu, rng),
            nn::make_dense_layer(cfg.hidden, d, nn::Activation::identity, rng)};
        head_.layers = {
            nn::make_dense_layer(cfg.n_fingerprints, 1, nn::Activation::identity, rng)};

        // optimize theta = log(alpha); alpha stays positive by construction
        std::vector<double> theta(layer_.alphas.size());
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta[i] = std::log(layer_.alphas.values()[i]);
        std::vector<double> dtheta(theta.size());
        nn::AdamState alpha_opt = nn::make_adam_state(theta.size(), cfg.learning_rate);

        NetOptimizer dec_opt, head_opt;
        dec_opt.init(decoder_, cfg.learning_rate);
        head_opt.init(head_, cfg.learning_rate);

        const nn::TrainNoise dec_noise{cfg.dropout, 0.0};
        std::vector<const nn::DenseNetwork*> nets{&decoder_, &head_};

        Matrix noisy, z, mse_grad, log_h;
        concrete::ConcreteCache ccache;
        concrete::ConcreteGrads cgrads;
        nn::ForwardCache dec_cache, head_cache;
        nn::Gradients dec_grads, head_grads;
        std::vector<double> lh_vec(n);
        trace_ = FitTrace{};

        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            const double temp = concrete::temperature(epoch, layer_);
            noisy = x;
            if (cfg.noise_std > 0.0)
                for (double& v : noisy.values()) v += cfg.noise_std * rng.normal();
            Matrix gumbel =
                concrete::gumbel_sample(layer_.n_neurons(), layer_.n_inputs(), rng);
            concrete::concrete_forward_train(noisy, layer_, temp, gumbel, z, ccache);

            const Matrix& x_hat =
                nn::forward(decoder_, z, nn::Mode::train, dec_noise, rng, dec_cache);
            const double rec = nn::mse_loss(x, x_hat, mse_grad);
            nn::backward(decoder_, dec_cache, mse_grad, dec_grads);

            const Matrix& lh = nn::forward(head_, z, nn::Mode::train, nn::TrainNoise{},
                                           rng, head_cache);
            for (std::size_t r = 0; r < n; ++r) lh_vec[r] = lh(r, 0);
            surv::CoxLoss cl = surv::cox_neural_loss(lh_vec, labels);
            log_h.resize(n, 1);
            for (std::size_t r = 0; r < n; ++r) log_h(r, 0) = cl.grad[r];
            nn::backward(head_, head_cache, log_h, head_grads);

            const double l2 = nn::l2_penalty(nets, cfg.l2_lambda);
            const double total = rec + cl.loss + l2;
            check_finite_loss(total, epoch);
            trace_.total.push_back(total);
            trace_.reconstruction.push_back(rec);
            trace_.cox.push_back(cl.loss);

            Matrix dz = dec_grads.input;
            {
                auto& dzv = dz.values();
                const auto& hv = head_grads.input.values();
                for (std::size_t i = 0; i < dzv.size(); ++i) dzv[i] += hv[i];
            }
            concrete::concrete_backward(ccache, dz, cgrads);

            nn::add_l2_gradient(decoder_, cfg.l2_lambda, dec_grads);
            nn::add_l2_gradient(head_, cfg.l2_lambda, head_grads);

            auto& av = layer_.alphas.values();
            const auto& dav = cgrads.alphas.values();
            for (std::size_t i = 0; i < theta.size(); ++i)
                dtheta[i] = dav[i] * av[i];  // chain rule through alpha = exp(theta)
            nn::adam_step(theta, dtheta, alpha_opt);
            for (std::size_t i = 0; i < theta.size(); ++i) av[i] = std::exp(theta[i]);

            dec_opt.step(decoder_, dec_grads);
            head_opt.step(head_, head_grads);
        }
        fitted_ = true;
    }

    Matrix transform(const Matrix& x) const override {
        require_fitted();
        return concrete::concrete_forward_eval(x, layer_);
    }

    Matrix importance() const override {
        require_fitted();
        Matrix imp(layer_.n_neurons(), layer_.n_inputs(), 0.0);
        const auto picks = concrete::selected_features(layer_);
        for (std::size_t i = 0; i < picks.size(); ++i) imp(i, picks[i]) = 1.0;
        return imp;
    }

    const FitTrace& trace() const override { return trace_; }

    std::vector<std::size_t> selected_inputs() const override {
        require_fitted();
        return concrete::selected_features(layer_);
    }

    const concrete::ConcreteLayer* selection_layer() const override {
        return fitted_ ? &layer_ : nullptr;
    }

    json to_json() const override {
        require_fitted();
        return json{{"format_version", kFormatVersion},
                    {"kind", "csae"},
                    {"alphas", matrix_to_json(layer_.alphas)},
                    {"t0", layer_.t0},
                    {"tb", layer_.tb},
                    {"epochs", layer_.epochs},
                    {"decoder", net_to_json(decoder_)},
                    {"head", net_to_json(head_)}};
    }

    void load(const json& j) {
        layer_.alphas = matrix_from_json(j.at("alphas"));
        layer_.t0 = j.at("t0").get<double>();
        layer_.tb = j.at("tb").get<double>();
        layer_.epochs = j.at("epochs").get<std::size_t>();
        decoder_ = net_from_json(j.at("decoder"));
        head_ = net_from_json(j.at("head"));
        fitted_ = true;
    }

private:
    void require_fitted() const {
        if (!fitted_) throw std::logic_error("model not fitted");
    }

    concrete::ConcreteLayer layer_;
    nn::DenseNetwork decoder_, head_;
    FitTrace trace_;
    bool fitted_ = false;
};

}  // namespace

std::unique_ptr<FingerprintModel> make_model(ModelKind kind) {
    switch (kind) {
        case ModelKind::pca: return std::make_unique<PcaModel>();
        case ModelKind::ae: return std::make_unique<AutoencoderModel>(false);
        case ModelKind::sae: return std::make_unique<AutoencoderModel>(true);
        case ModelKind::csae: return std::make_unique<CsaeModel>();
    }
    throw std::logic_error("bad model kind");
}

std::unique_ptr<FingerprintModel> model_from_json(const json& j) {
    check_version(j);
    const ModelKind kind = kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
        case ModelKind::pca: {
            auto m = std::make_unique<PcaModel>();
            m->load(j);
            return m;
        }
        case ModelKind::ae: {
            auto m = std::make_unique<AutoencoderModel>(false);
            m->load(j);
            return m;
        }
        case ModelKind::sae: {
            auto m = std::make_unique<AutoencoderModel>(true);
            m->load(j);
            return m;
        }
        case ModelKind::csae: {
            auto m = std::make_unique<CsaeModel>();
            m->load(j);
            return m;
        }
    }
    throw std::logic_error("bad model kind");
}

ImportanceReport importance_report(const FingerprintModel& model,
                                   const std::vector<data::FeatureRef>& refs) {
    const Matrix imp = model.importance();
    if (imp.cols() != refs.size())
        throw std::invalid_argument("feature reference count mismatch");
    ImportanceReport report;
    report.per_fingerprint.resize(imp.rows());
    for (std::size_t i = 0; i < imp.rows(); ++i) {
        auto& entries = report.per_fingerprint[i];
        entries.reserve(imp.cols());
        for (std::size_t j = 0; j < imp.cols(); ++j)
            entries.push_back({refs[j], imp(i, j)});
        std::sort(entries.begin(), entries.end(),
                  [](const ImportanceEntry& a, const ImportanceEntry& b) {
                      if (a.weight != b.weight) return a.weight > b.weight;
                      return a.feature.global_index < b.feature.global_index;
                  });
    }
    return report;
}

}  // namespace coxfuse::models
