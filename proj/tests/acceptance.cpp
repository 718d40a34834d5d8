// Acceptance gates for the toolkit. Each criterion prints one PASS/FAIL
// line; the exit code is the number of failed criteria. Heavy statistical
// checks (5, 6) use frozen seeds so reruns are bit-for-bit repeatable.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "coxfuse/concrete.hpp"
#include "coxfuse/data_model.hpp"
#include "coxfuse/models.hpp"
#include "coxfuse/nn.hpp"
#include "coxfuse/pipeline.hpp"
#include "coxfuse/report_io.hpp"
#include "coxfuse/rng.hpp"
#include "coxfuse/survival.hpp"
#include "coxfuse/synthetic.hpp"

using namespace coxfuse;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

Outcome fail(std::string msg) { return {false, std::move(msg)}; }

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string fmt(const char* pattern, ...) {
    char buf[256];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

data::SurvivalLabels labels_of(std::vector<double> t, std::vector<std::uint8_t> e) {
    data::SurvivalLabels l;
    l.time = std::move(t);
    l.event = std::move(e);
    return l;
}

// Brute-force Breslow partial log-likelihood for a single covariate.
double breslow_ll(double beta, const std::vector<double>& x,
                  const data::SurvivalLabels& lab) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!lab.event[i]) continue;
        double denom = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (lab.time[j] >= lab.time[i]) denom += std::exp(beta * x[j]);
        ll += beta * x[i] - std::log(denom);
    }
    return ll;
}

// Golden-section maximizer, the independent oracle for cox_fit.
double golden_max(const std::function<double(double)>& f, double lo, double hi) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    for (int it = 0; it < 200; ++it) {
        if (f(c) > f(d)) b = d; else a = c;
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    return (a + b) / 2.0;
}

Outcome criterion1() {
    // concordance_index worked examples
    {
        const auto all = labels_of({1, 2, 3}, {1, 1, 1});
        const std::vector<double> perfect{3, 2, 1}, anti{1, 2, 3}, flat{1, 1, 1};
        if (!near(surv::concordance_index(perfect, all), 1.0, 1e-6))
            return fail("concordance: monotone case is not 1");
        if (!near(surv::concordance_index(anti, all), 0.0, 1e-6))
            return fail("concordance: anti-concordant case is not 0");
        if (!near(surv::concordance_index(flat, all), 0.5, 1e-6))
            return fail("concordance: all-tied case is not 0.5");
        const auto cens = labels_of({1, 2, 3}, {1, 0, 1});
        const std::vector<double> r{3, 1, 2};
        if (!near(surv::concordance_index(r, cens), 1.0, 1e-6))
            return fail("concordance: censored admissible-pair case is not 1");
    }
    // km_estimate worked examples
    {
        const auto curve = surv::km_estimate(labels_of({1, 2, 3}, {1, 1, 1}));
        if (curve.event_times != std::vector<double>{1, 2, 3})
            return fail("km: event times wrong on the three-event case");
        const double want[] = {2.0 / 3.0, 1.0 / 3.0, 0.0};
        for (int i = 0; i < 3; ++i)
            if (!near(curve.survival[i], want[i], 1e-6))
                return fail("km: survival values off on the three-event case");
        if (curve.at_risk != std::vector<std::size_t>{3, 2, 1})
            return fail("km: at-risk counts wrong");
        if (!surv::km_estimate(labels_of({1, 2, 3}, {0, 0, 0})).event_times.empty())
            return fail("km: all-censored case has event times");
        const auto tied = surv::km_estimate(labels_of({1, 1, 2}, {1, 0, 1}));
        if (tied.event_times != std::vector<double>{1, 2} ||
            !near(tied.survival[0], 2.0 / 3.0, 1e-6) ||
            !near(tied.survival[1], 0.0, 1e-6))
            return fail("km: censored tie case off");
    }
    // logrank_test worked examples; the split-group value is pinned against
    // a hand hypergeometric table (chi2 exact fraction 5.051660516605166)
    {
        const auto same = labels_of({1, 2, 3, 1, 2, 3}, {1, 1, 1, 1, 1, 1});
        const std::vector<std::uint8_t> g{0, 0, 0, 1, 1, 1};
        const auto r0 = surv::logrank_test(same, g);
        if (!near(r0.chi2, 0.0, 1e-9) || !near(r0.p, 1.0, 1e-9))
            return fail("logrank: identical groups not chi2=0, p=1");
        const auto split = labels_of({1, 2, 3, 10, 11, 12}, {1, 1, 1, 1, 1, 1});
        const auto r1 = surv::logrank_test(split, g);
        if (!near(r1.chi2, 5.051660516605166, 1e-6))
            return fail(fmt("logrank: chi2 %.9f vs oracle 5.051660517", r1.chi2));
        if (!near(r1.p, 0.02460234995364174, 1e-6))
            return fail(fmt("logrank: p %.9f vs oracle 0.024602350", r1.p));
    }
    // cox_neural_loss worked examples
    {
        const auto one = surv::cox_neural_loss(std::vector<double>{0.7},
                                               labels_of({5}, {1}));
        if (!near(one.loss, 0.0, 1e-12) || !near(one.grad[0], 0.0, 1e-12))
            return fail("cox loss: single-sample risk set is not free");
        const auto two = surv::cox_neural_loss(std::vector<double>{0, 0},
                                               labels_of({2, 1}, {1, 1}));
        if (!near(two.loss, std::log(2.0) / 2.0, 1e-6))
            return fail(fmt("cox loss: %.9f vs (log 2)/2", two.loss));
        if (!near(two.grad[0], 0.25, 1e-6) || !near(two.grad[1], -0.25, 1e-6))
            return fail("cox loss: gradient off on the two-event case");
    }
    // cox_fit against the golden-section oracle (1e-3)
    {
        const std::vector<double> sep{0, 0, 1, 1};
        const auto lab = labels_of({4, 3, 2, 1}, {1, 1, 1, 1});
        Matrix x(4, 1);
        for (int i = 0; i < 4; ++i) x(i, 0) = sep[i];
        const auto fit = surv::cox_fit(x, lab, 0.0);
        if (fit.beta[0] <= 0.0) return fail("cox fit: separated beta not positive");
        const double bstar = golden_max(
            [&](double b) { return breslow_ll(b, sep, lab); }, -1.0, 50.0);
        if (!near(fit.log_likelihood, breslow_ll(bstar, sep, lab), 1e-3))
            return fail("cox fit: separated log-likelihood off the oracle");

        const std::vector<double> mix{0, 1, 0, 1};
        Matrix xm(4, 1);
        for (int i = 0; i < 4; ++i) xm(i, 0) = mix[i];
        const auto fm = surv::cox_fit(xm, lab, 0.0);
        const double bm = golden_max(
            [&](double b) { return breslow_ll(b, mix, lab); }, -5.0, 5.0);
        if (!fm.converged) return fail("cox fit: interleaved case did not converge");
        if (!near(fm.beta[0], bm, 1e-3))
            return fail(fmt("cox fit: beta %.6f vs oracle %.6f", fm.beta[0], bm));

        // the pair (0 then 1) and its mirror (1 then 0): symmetric likelihood
        const std::vector<double> bal{0, 1, 1, 0};
        Matrix xb(4, 1);
        for (int i = 0; i < 4; ++i) xb(i, 0) = bal[i];
        const auto fb = surv::cox_fit(xb, labels_of({1, 2, 1, 2}, {1, 1, 1, 1}), 0.0);
        if (!near(fb.beta[0], 0.0, 1e-6))
            return fail("cox fit: order-balanced covariate beta not ~0");
        if (surv::cox_pvalues(fb)[0] <= 0.5)
            return fail("cox fit: order-balanced covariate p not large");
    }
    return {true, "worked examples within 1e-6 (cox fits within 1e-3 of oracle)"};
}

Outcome criterion2() {
    const double tol = 1e-4, step = 1e-5, lambda = 0.001;
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const std::size_t n = 12, d = 9, h = 7, F = 5;
        Rng rng(seed);
        Matrix x(n, d);
        for (auto& v : x.values()) v = rng.normal();
        data::SurvivalLabels lab;
        for (std::size_t i = 0; i < n; ++i) {
            lab.time.push_back(rng.uniform(1.0, 10.0));
            lab.event.push_back(rng.uniform() < 0.7 ? 1 : 0);
        }
        lab.event[0] = 1;

        nn::DenseNetwork enc, dec, head;
        enc.layers = {nn::make_dense_layer(d, h, nn::Activation::relu, rng),
                      nn::make_dense_layer(h, F, nn::Activation::identity, rng)};
        dec.layers = {nn::make_dense_layer(F, h, nn::Activation::relu, rng),
                      nn::make_dense_layer(h, d, nn::Activation::identity, rng)};
        head.layers = {nn::make_dense_layer(F, 1, nn::Activation::identity, rng)};
        const std::vector<const nn::DenseNetwork*> nets{&enc, &dec, &head};

        const auto total_loss = [&]() {
            const Matrix z = nn::forward_eval(enc, x);
            const Matrix xh = nn::forward_eval(dec, z);
            Matrix g;
            const double rec = nn::mse_loss(x, xh, g);
            const Matrix lh = nn::forward_eval(head, z);
            std::vector<double> lhv(n);
            for (std::size_t i = 0; i < n; ++i) lhv[i] = lh(i, 0);
            const double cox = surv::cox_neural_loss(lhv, lab).loss;
            return rec + cox + nn::l2_penalty(nets, lambda);
        };

        // analytic gradients: both heads feed the encoder
        nn::ForwardCache ce, cd, ch;
        nn::Gradients ge, gd, gh;
        const nn::TrainNoise quiet{};
        const Matrix& z = nn::forward(enc, x, nn::Mode::train, quiet, rng, ce);
        const Matrix& xh = nn::forward(dec, z, nn::Mode::train, quiet, rng, cd);
        Matrix mse_g;
        nn::mse_loss(x, xh, mse_g);
        nn::backward(dec, cd, mse_g, gd);
        const Matrix& lh = nn::forward(head, z, nn::Mode::train, quiet, rng, ch);
        std::vector<double> lhv(n);
        for (std::size_t i = 0; i < n; ++i) lhv[i] = lh(i, 0);
        const auto cl = surv::cox_neural_loss(lhv, lab);
        Matrix cox_g(n, 1);
        for (std::size_t i = 0; i < n; ++i) cox_g(i, 0) = cl.grad[i];
        nn::backward(head, ch, cox_g, gh);
        Matrix dz = gd.input;
        for (std::size_t i = 0; i < dz.size(); ++i)
            dz.values()[i] += gh.input.values()[i];
        nn::backward(enc, ce, dz, ge);
        nn::add_l2_gradient(enc, lambda, ge);
        nn::add_l2_gradient(dec, lambda, gd);
        nn::add_l2_gradient(head, lambda, gh);

        nn::DenseNetwork* const net_ptr[] = {&enc, &dec, &head};
        nn::Gradients* const grad_ptr[] = {&ge, &gd, &gh};
        for (int m = 0; m < 3; ++m) {
            auto& net = *net_ptr[m];
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                auto probe_one = [&](double& p, double analytic) -> bool {
                    const double orig = p;
                    p = orig + step;
                    const double up = total_loss();
                    p = orig - step;
                    const double dn = total_loss();
                    p = orig;
                    const double fd = (up - dn) / (2.0 * step);
                    ++checked;
                    return std::abs(analytic - fd) <= tol * std::max(1.0, std::abs(fd));
                };
                auto& w = net.layers[l].weights.values();
                for (std::size_t i = 0; i < w.size(); ++i)
                    if (!probe_one(w[i], grad_ptr[m]->weights[l].values()[i]))
                        return fail(fmt("net %d layer %zu weight %zu off", m, l, i));
                auto& b = net.layers[l].bias;
                for (std::size_t i = 0; i < b.size(); ++i)
                    if (!probe_one(b[i], grad_ptr[m]->bias[l][i]))
                        return fail(fmt("net %d layer %zu bias %zu off", m, l, i));
            }
        }
    }

    // concrete layer, fixed Gumbel draws
    for (std::uint64_t seed = 11; seed <= 15; ++seed) {
        const std::size_t k = 3, d = 7, n = 4;
        Rng rng(seed);
        auto layer = concrete::make_concrete_layer(k, d, 10.0, 0.1, 100, rng);
        Matrix x(n, d), upstream(n, k);
        for (auto& v : x.values()) v = rng.normal();
        for (auto& v : upstream.values()) v = rng.normal();
        const Matrix gumbel = concrete::gumbel_sample(k, d, rng);
        const double temp = 0.7;

        const auto loss_of = [&]() {
            Matrix out;
            concrete::ConcreteCache cache;
            concrete::concrete_forward_train(x, layer, temp, gumbel, out, cache);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i)
                s += out.values()[i] * upstream.values()[i];
            return s;
        };

        Matrix out;
        concrete::ConcreteCache cache;
        concrete::concrete_forward_train(x, layer, temp, gumbel, out, cache);
        concrete::ConcreteGrads grads;
        concrete::concrete_backward(cache, upstream, grads);

        auto probe_one = [&](double& p, double analytic) -> bool {
            const double orig = p;
            p = orig + step;
            const double up = loss_of();
            p = orig - step;
            const double dn = loss_of();
            p = orig;
            const double fd = (up - dn) / (2.0 * step);
            ++checked;
            return std::abs(analytic - fd) <= tol * std::max(1.0, std::abs(fd));
        };
        for (std::size_t i = 0; i < layer.alphas.size(); ++i)
            if (!probe_one(layer.alphas.values()[i], grads.alphas.values()[i]))
                return fail(fmt("concrete alpha slot %zu off", i));
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!probe_one(x.values()[i], grads.input.values()[i]))
                return fail(fmt("concrete input slot %zu off", i));
    }
    return {true, fmt("%zu parameter slots within 1e-4 of central differences",
                      checked)};
}

Outcome criterion3() {
    Rng rng(3);
    const std::size_t n = 30;
    data::SurvivalLabels lab;
    std::vector<double> lh(n);
    for (std::size_t i = 0; i < n; ++i) {
        lab.time.push_back(rng.uniform(1.0, 100.0));
        lab.event.push_back(rng.uniform() < 0.6 ? 1 : 0);
        lh[i] = rng.normal();
    }
    lab.event[0] = 1;
    const auto base = surv::cox_neural_loss(lh, lab);
    for (const double c : {-7.5, 0.001, 1234.5}) {
        auto shifted = lh;
        for (auto& v : shifted) v += c;
        const auto got = surv::cox_neural_loss(shifted, lab);
        if (!near(got.loss, base.loss, 1e-9))
            return fail(fmt("loss moved by %.3g under shift %.4g",
                            got.loss - base.loss, c));
        for (std::size_t i = 0; i < n; ++i)
            if (!near(got.grad[i], base.grad[i], 1e-9))
                return fail(fmt("gradient moved under shift %.4g", c));
    }

    std::vector<double> affine(n), expd(n);
    for (std::size_t i = 0; i < n; ++i) {
        affine[i] = 2.0 * lh[i] + 3.0;
        expd[i] = std::exp(lh[i]);
    }
    const double ci = surv::concordance_index(lh, lab);
    if (surv::concordance_index(affine, lab) != ci)
        return fail("concordance changed under an affine transform");
    if (surv::concordance_index(expd, lab) != ci)
        return fail("concordance changed under exp");
    return {true, "loss shift-invariant to 1e-9; concordance exactly "
                  "monotone-invariant"};
}

Outcome criterion4() {
    synth::SyntheticSpec spec;
    spec.n_samples = 80;
    spec.layers = {{"cnv", 8}, {"gex", 12}};
    spec.planted = {{"gex", 0, 1.5}, {"cnv", 3, -1.2}};
    spec.censoring_rate = 0.2;
    spec.seed = 4242;
    const auto ds = synth::generate_synthetic(spec);

    pipeline::PipelineConfig cfg;
    cfg.k_per_layer = 20;
    cfg.n_fingerprints = 4;
    cfg.hidden = 8;
    cfg.epochs = 20;
    cfg.dropout = 0.1;
    cfg.noise_std = 0.1;
    cfg.folds = 5;
    cfg.repeats = 1;

    const auto splits = pipeline::make_folds(ds.n_samples(), 5, 1, 9);
    const auto& split = splits[0][0];

    pipeline::FoldArtifacts clean, poisoned;
    const auto r1 = pipeline::run_fold(ds, split.train, split.test,
                                       models::ModelKind::sae, cfg, 777, &clean);
    if (!r1.ok()) return fail("clean fold failed: " + r1.failure);

    auto bad = ds;
    for (const std::size_t i : split.test) {
        for (auto& layer : bad.layers)
            for (std::size_t c = 0; c < layer.values.cols(); ++c)
                layer.values(i, c) = 1e6 + static_cast<double>(c);
        bad.survival.time[i] += 1000.0;  // events kept so the fold completes
    }
    const auto r2 = pipeline::run_fold(bad, split.train, split.test,
                                       models::ModelKind::sae, cfg, 777, &poisoned);
    if (!r2.ok()) return fail("poisoned fold failed: " + r2.failure);

    if (clean.selection != poisoned.selection)
        return fail("variance selection saw test rows");
    if (!(clean.scaler == poisoned.scaler)) return fail("scaler saw test rows");
    if (clean.model_json != poisoned.model_json)
        return fail("model parameters saw test rows");
    if (!(clean.centroids == poisoned.centroids))
        return fail("centroids saw test rows");
    if (clean.cox_beta != poisoned.cox_beta)
        return fail("cox coefficients saw test rows");
    return {true, "train-side state exactly equal under test-row perturbation"};
}

data::MultiOmicsDataset planted300(std::uint64_t seed) {
    synth::SyntheticSpec spec;
    spec.n_samples = 300;
    spec.layers = {{"cnv", 100}, {"gex", 100}, {"meth", 100}};
    spec.planted = {{"gex", 0, 2.0},
                    {"gex", 1, -1.5},
                    {"cnv", 0, 1.5},
                    {"meth", 0, -2.0},
                    {"meth", 1, 1.0}};
    spec.censoring_rate = 0.3;
    spec.seed = seed;
    return synth::generate_synthetic(spec);
}

data::MultiOmicsDataset permute_labels(data::MultiOmicsDataset ds,
                                       std::uint64_t seed) {
    std::vector<std::size_t> perm(ds.n_samples());
    std::iota(perm.begin(), perm.end(), 0);
    Rng r(seed);
    r.shuffle(perm);
    const auto t = ds.survival.time;
    const auto e = ds.survival.event;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        ds.survival.time[i] = t[perm[i]];
        ds.survival.event[i] = e[perm[i]];
    }
    return ds;
}

Outcome criterion5() {
    pipeline::PipelineConfig cfg;
    cfg.k_per_layer = 100;
    cfg.n_fingerprints = 16;
    cfg.hidden = 128;
    cfg.epochs = 96;
    cfg.folds = 5;
    cfg.repeats = 2;

    double sae_sum = 0.0, ae_sum = 0.0, ctrl_sum = 0.0;
    std::size_t sae_n = 0, ae_n = 0, ctrl_n = 0;
    for (std::uint64_t ms = 1; ms <= 10; ++ms) {
        const auto ds = planted300(500 + ms);
        cfg.master_seed = ms;
        const auto sae =
            pipeline::cross_validate(ds, models::ModelKind::sae, cfg, "planted");
        const auto ae =
            pipeline::cross_validate(ds, models::ModelKind::ae, cfg, "planted");
        const auto ctrl = pipeline::cross_validate(
            permute_labels(ds, derive_seed(ms, 0xC0)), models::ModelKind::sae,
            cfg, "control");
        if (sae.n_success != 10 || ae.n_success != 10 || ctrl.n_success != 10)
            return fail(fmt("seed %llu: a fold failed",
                            static_cast<unsigned long long>(ms)));
        for (const auto& f : sae.folds) { sae_sum += f.c_index; ++sae_n; }
        for (const auto& f : ae.folds) { ae_sum += f.c_index; ++ae_n; }
        for (const auto& f : ctrl.folds) { ctrl_sum += f.c_index; ++ctrl_n; }
    }
    const double sae_mean = sae_sum / static_cast<double>(sae_n);
    const double ae_mean = ae_sum / static_cast<double>(ae_n);
    const double ctrl_mean = ctrl_sum / static_cast<double>(ctrl_n);
    const auto detail = fmt("sae %.4f, ae %.4f, permuted-label control %.4f "
                            "over 10 master seeds",
                            sae_mean, ae_mean, ctrl_mean);
    if (!(sae_mean > 0.65)) return fail("sae mean <= 0.65; " + detail);
    if (!(ctrl_mean >= 0.45 && ctrl_mean <= 0.55))
        return fail("control outside [0.45, 0.55]; " + detail);
    if (!(sae_mean >= ae_mean)) return fail("sae mean < ae mean; " + detail);
    return {true, detail};
}

// d=50 with three hub columns carrying the hazard; eight echo columns per
// hub at 0.8 correlation make the hubs the best picks for reconstruction
// and survival alike. Enrichment: 3 of 8 picks on 3/50 planted = 6.25x.
void hub_data(std::uint64_t seed, Matrix& x, data::SurvivalLabels& lab) {
    const std::size_t n = 300, d = 50;
    const std::size_t hubs[3] = {3, 17, 31};
    const double w[3] = {2.0, -2.0, 2.0};
    Rng rng(seed);
    x.resize(n, d);
    for (auto& v : x.values()) v = rng.normal();
    lab.time.assign(n, 0.0);
    lab.event.assign(n, 1);
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < d; ++j)
        if (j != hubs[0] && j != hubs[1] && j != hubs[2]) rest.push_back(j);
    for (std::size_t i = 0; i < n; ++i) {
        double risk = 0.0;
        for (std::size_t h = 0; h < 3; ++h) {
            const double u = x(i, hubs[h]);
            risk += w[h] * u;
            for (std::size_t e = 0; e < 8; ++e)
                x(i, rest[h * 8 + e]) = 0.8 * u + 0.6 * x(i, rest[h * 8 + e]);
        }
        lab.time[i] = -std::log(std::max(rng.uniform(), 1e-300)) / std::exp(risk);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t i = 0; i < n * 3 / 10; ++i) {
        lab.event[order[i]] = 0;
        lab.time[order[i]] *= rng.uniform();
    }
}

Outcome criterion6() {
    models::ModelConfig mcfg;
    mcfg.n_fingerprints = 8;
    mcfg.hidden = 64;
    mcfg.epochs = 2000;
    mcfg.dropout = 0.1;
    mcfg.noise_std = 0.1;

    std::size_t enriched = 0;
    double worst_agree = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Matrix raw;
        data::SurvivalLabels lab;
        hub_data(900 + seed, raw, lab);
        const auto scaler = data::zscore_fit(raw);
        const auto x = data::zscore_apply(scaler, raw);

        auto model = models::make_model(models::ModelKind::csae);
        model->fit(x, lab, mcfg, seed);
        const auto picks = model->selected_inputs();

        std::size_t hits = 0;
        for (const auto p : picks)
            if (p == 3 || p == 17 || p == 31) ++hits;
        if (hits >= 3) ++enriched;  // (3/8)/(3/50) = 6.25 >= 5

        const auto z = model->transform(x);
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t f = 0; f < z.cols(); ++f)
                if (z(i, f) != x(i, picks[f]))
                    return fail("fingerprints are not exact input columns");

        const auto* layer = model->selection_layer();
        const Matrix zero_g(layer->n_neurons(), layer->n_inputs());
        Matrix out;
        concrete::ConcreteCache cache;
        concrete::concrete_forward_train(x, *layer, 0.1, zero_g, out, cache);
        const auto ev = concrete::concrete_forward_eval(x, *layer);
        for (std::size_t i = 0; i < out.size(); ++i)
            worst_agree = std::max(
                worst_agree, std::abs(out.values()[i] - ev.values()[i]));
    }
    const auto detail =
        fmt("%zu/20 seeds at >=6.25x enrichment; worst train/eval gap %.2e",
            enriched, worst_agree);
    if (enriched < 16) return fail("enrichment below 80% of seeds; " + detail);
    if (!(worst_agree < 1e-3))
        return fail("train/eval disagreement at T=0.1; " + detail);
    return {true, detail};
}

Outcome criterion7() {
    Rng rng(7);
    const auto layer = concrete::make_concrete_layer(2, 5, 10.0, 0.1, 100, rng);
    if (concrete::temperature(0, layer) != 10.0)
        return fail("T(0) is not exactly 10");
    if (concrete::temperature(100, layer) != 0.1)
        return fail("T(B) is not exactly 0.1");
    if (!near(concrete::temperature(50, layer), 1.0, 1e-12))
        return fail("T(B/2) off 1.0 by more than 1e-12");
    return {true, "T(0)=10, T(B)=0.1 exact; T(B/2)=1 within 1e-12"};
}

Outcome criterion8() {
    synth::SyntheticSpec spec;
    spec.n_samples = 60;
    spec.layers = {{"gex", 10}, {"cnv", 6}};
    spec.planted = {{"gex", 0, 1.5}};
    spec.censoring_rate = 0.2;
    spec.seed = 88;
    const auto ds = synth::generate_synthetic(spec);

    pipeline::PipelineConfig cfg;
    cfg.k_per_layer = 10;
    cfg.n_fingerprints = 4;
    cfg.hidden = 8;
    cfg.epochs = 10;
    cfg.folds = 10;
    cfg.repeats = 10;
    cfg.master_seed = 3;

    const auto a =
        pipeline::cross_validate(ds, models::ModelKind::pca, cfg, "shape");
    if (a.folds.size() != 100)
        return fail(fmt("%zu fold records instead of 100", a.folds.size()));
    for (std::size_t i = 0; i < 100; ++i)
        if (a.folds[i].repeat_index != i / 10 || a.folds[i].fold_index != i % 10)
            return fail("fold records out of (repeat, fold) order");
    const auto b =
        pipeline::cross_validate(ds, models::ModelKind::pca, cfg, "shape");
    if (report::cv_csv(a) != report::cv_csv(b))
        return fail("rerun CSV differs byte for byte");
    if (report::cv_json(a).dump(2) != report::cv_json(b).dump(2))
        return fail("rerun JSON differs");
    return {true, fmt("100 fold records in order; rerun byte-identical "
                      "(%zu successes)", a.n_success)};
}

Outcome criterion9() {
    struct Cohort {
        const char* name;
        std::size_t width[7];  // clinical, gex, cnv, meth, mirna, mut, rppa
        std::size_t used;
    };
    // published per-cohort feature counts; "used" is the post-selection width
    const Cohort cohorts[] = {
        {"BLCA", {9, 20225, 24776, 22124, 740, 16317, 189}, 4938},
        {"BRCA", {9, 20227, 24776, 19371, 737, 15358, 190}, 4936},
        {"COAD", {16, 17507, 24776, 21424, 740, 17569, 189}, 4945},
        {"ESCA", {17, 19076, 24776, 21941, 737, 9012, 193}, 4947},
        {"HNSC", {16, 20169, 24776, 21647, 735, 11752, 191}, 4942},
        {"KIRC", {14, 20230, 24776, 19456, 735, 9252, 189}, 4938},
        {"KIRP", {5, 20178, 24776, 21921, 738, 8486, 190}, 4933},
        {"LGG", {15, 20209, 24776, 21564, 740, 10760, 190}, 4945},
        {"LIHC", {3, 20078, 24776, 21739, 742, 8719, 190}, 4935},
        {"LUAD", {11, 20165, 24776, 21059, 739, 16060, 189}, 4939},
        {"LUSC", {20, 20232, 24776, 20659, 739, 15510, 189}, 4948},
        {"OV", {17, 19064, 24776, 19639, 731, 8347, 189}, 4937},
        {"PAAD", {26, 19932, 24776, 21586, 732, 9412, 190}, 4948},
        {"SARC", {45, 20206, 24776, 21724, 739, 8385, 193}, 4977},
        {"SKCM", {3, 20179, 24776, 21635, 741, 17731, 189}, 4933},
        {"STAD", {7, 16765, 24776, 21506, 743, 16870, 193}, 4943},
        {"UCEC", {24, 17507, 24776, 21692, 743, 19199, 189}, 4956},
    };
    const char* layer_names[7] = {"clinical", "gex",     "cnv", "meth",
                                  "mirna",    "mutation", "rppa"};
    for (const auto& cohort : cohorts) {
        data::MultiOmicsDataset ds;
        ds.sample_ids = {"s0", "s1", "s2", "s3"};
        for (int l = 0; l < 7; ++l) {
            data::OmicsLayer layer;
            layer.name = layer_names[l];
            layer.values = Matrix(4, cohort.width[l]);
            layer.feature_names.reserve(cohort.width[l]);
            for (std::size_t f = 0; f < cohort.width[l]; ++f)
                layer.feature_names.push_back("f" + std::to_string(f));
            ds.layers.push_back(std::move(layer));
        }
        ds.survival = labels_of({1, 2, 3, 4}, {1, 1, 1, 1});

        std::vector<std::vector<std::size_t>> sel;
        for (const auto& layer : ds.layers)
            sel.push_back(data::variance_topk(layer, 1000));
        const auto [matrix, refs] = data::concat_selected(ds, sel);
        if (matrix.cols() != cohort.used || refs.size() != cohort.used)
            return fail(fmt("%s: width %zu instead of %zu", cohort.name,
                            matrix.cols(), cohort.used));
    }

    // with real matrices on disk, run the same check on the load path
    std::size_t real_checked = 0;
    if (const char* root = std::getenv("COXFUSE_TCGA_DIR")) {
        for (const auto& cohort : cohorts) {
            const auto dir = std::filesystem::path(root) / cohort.name;
            if (!std::filesystem::is_directory(dir)) continue;
            const auto ds = data::load_dataset(dir);
            std::vector<std::vector<std::size_t>> sel;
            for (const auto& layer : ds.layers)
                sel.push_back(data::variance_topk(layer, 1000));
            const auto [matrix, refs] = data::concat_selected(ds, sel);
            if (matrix.cols() != cohort.used)
                return fail(fmt("%s on disk: width %zu instead of %zu",
                                cohort.name, matrix.cols(), cohort.used));
            ++real_checked;
        }
    }
    const auto detail =
        real_checked > 0
            ? fmt("17/17 cohort widths match at k=1000; %zu checked from disk",
                  real_checked)
            : std::string("17/17 cohort widths match at k=1000; no matrices "
                          "supplied, set COXFUSE_TCGA_DIR to check from disk");
    return {true, detail};
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* title;
        Outcome (*run)();
    };
    const Entry entries[] = {
        {1, "survival-stat oracles", criterion1},
        {2, "gradient suite", criterion2},
        {3, "shift and monotone invariance", criterion3},
        {4, "no leakage into train-side state", criterion4},
        {5, "planted-signal benchmark", criterion5},
        {6, "concrete selection enrichment", criterion6},
        {7, "temperature schedule", criterion7},
        {8, "pipeline shape and determinism", criterion8},
        {9, "published per-cohort used widths", criterion9},
    };
    int failed = 0;
    for (const auto& entry : entries) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = entry.run();
        } catch (const std::exception& e) {
            outcome = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        std::printf("criterion %d: %s  %s (%s) [%.1fs]\n", entry.id,
                    outcome.ok ? "PASS" : "FAIL", entry.title,
                    outcome.detail.c_str(), secs);
        std::fflush(stdout);
        if (!outcome.ok) ++failed;
    }
    std::printf("%d/9 criteria passed\n", 9 - failed);
    return failed;
}
