#include "coxfuse/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "coxfuse/errors.hpp"
#include "coxfuse/kernels.hpp"
#include "coxfuse/linalg.hpp"

namespace coxfuse::surv {

namespace {

void check_labels(const data::SurvivalLabels& labels, std::size_t n) {
    if (labels.size() != n || labels.event.size() != n)
        throw std::invalid_argument("label length mismatch");
}

// indices sorted by descending time, so walking them grows the risk set
std::vector<std::size_t> desc_time_order(const data::SurvivalLabels& labels) {
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return labels.time[a] > labels.time[b];
    });
    return order;
}

}  // namespace

double concordance_index(std::span<const double> predictions,
                         const data::SurvivalLabels& labels) {
    const std::size_t n = predictions.size();
    check_labels(labels, n);
    double correct = 0.0, tied = 0.0, admissible = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool ei = labels.event[i], ej = labels.event[j];
            const double ti = labels.time[i], tj = labels.time[j];
            if (ei && ej) {
                admissible += 1.0;
                if (ti == tj) {
                    tied += 1.0;  // no ground-truth ordering
                } else {
                    const std::size_t early = ti < tj ? i : j;
                    const std::size_t late = ti < tj ? j : i;
                    if (predictions[early] > predictions[late])
                        correct += 1.0;
                    else if (predictions[early] == predictions[late])
                        tied += 1.0;
                }
            } else if (ei != ej) {
                const std::size_t ev = ei ? i : j;   // the observed event
                const std::size_t cs = ei ? j : i;   // the censored sample
                if (labels.time[ev] > labels.time[cs]) continue;  // inadmissible
                admissible += 1.0;
                if (predictions[ev] > predictions[cs])
                    correct += 1.0;
                else if (predictions[ev] == predictions[cs])
                    tied += 1.0;
            }
        }
    }
    if (admissible == 0.0) throw DataError("no admissible pairs");
    return (correct + tied / 2.0) / admissible;
}

KmCurve km_estimate(const data::SurvivalLabels& labels) {
    const std::size_t n = labels.size();
    if (n == 0) throw std::invalid_argument("no samples");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return labels.time[a] < labels.time[b];
    });

    KmCurve curve;
    double s = 1.0;
    std::size_t i = 0;
    while (i < n) {
        const double t = labels.time[order[i]];
        const std::size_t at_risk = n - i;
        std::size_t deaths = 0;
        std::size_t j = i;
        while (j < n && labels.time[order[j]] == t) {
            if (labels.event[order[j]]) ++deaths;
            ++j;
        }
        if (deaths > 0) {
            s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
            curve.event_times.push_back(t);
            curve.survival.push_back(s);
            curve.at_risk.push_back(at_risk);
            curve.events.push_back(deaths);
        }
        i = j;
    }
    return curve;
}

LogrankResult logrank_test(const data::SurvivalLabels& labels,
                           std::span<const std::uint8_t> groups) {
    const std::size_t n = labels.size();
    check_labels(labels, n);
    if (groups.size() != n) throw std::invalid_argument("group length mismatch");
    std::size_t n1 = 0;
    for (auto g : groups) {
        if (g > 1) throw std::invalid_argument("groups must be 0/1");
        n1 += g;
    }
    if (n1 == 0 || n1 == n) throw DataError("empty group");
    if (labels.n_events() == 0) throw DataError("no events");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return labels.time[a] < labels.time[b];
    });

    double observed1 = 0.0, expected1 = 0.0, variance = 0.0;
    std::size_t i = 0;
    std::size_t risk1 = n1;
    std::size_t risk_total = n;
    while (i < n) {
        const double t = labels.time[order[i]];
        std::size_t d_total = 0, d1 = 0, leaving = 0, leaving1 = 0;
        std::size_t j = i;
        while (j < n && labels.time[order[j]] == t) {
            const std::size_t idx = order[j];
            if (labels.event[idx]) {
                ++d_total;
                if (groups[idx]) ++d1;
            }
            ++leaving;
            if (groups[idx]) ++leaving1;
            ++j;
        }
        if (d_total > 0) {
            const double nt = static_cast<double>(risk_total);
            const double n1t = static_cast<double>(risk1);
            const double dt = static_cast<double>(d_total);
            observed1 += static_cast<double>(d1);
            expected1 += dt * n1t / nt;
            if (risk_total > 1)
                variance += dt * (n1t / nt) * (1.0 - n1t / nt) * (nt - dt) / (nt - 1.0);
        }
        risk_total -= leaving;
        risk1 -= leaving1;
        i = j;
    }

    LogrankResult res;
    if (variance <= 0.0) {
        res.chi2 = 0.0;
        res.p = 1.0;
        return res;
    }
    const double diff = observed1 - expected1;
    res.chi2 = diff * diff / variance;
    res.p = linalg::chi2_sf_1df(res.chi2);
    return res;
}

namespace {

// Breslow partial log-likelihood, gradient, and Hessian at beta.
// Accumulates the risk-set sums S0, S1, S2 by walking descending time;
// samples tied on time all enter the risk set before their events score.
struct CoxObjective {
    double ll = 0.0;
    std::vector<double> grad;
    Matrix hessian;  // negative second derivative (information)
};

CoxObjective cox_objective(const Matrix& x, const data::SurvivalLabels& labels,
                           std::span<const double> beta,
                           const std::vector<std::size_t>& order, double penalty) {
    const std::size_t n = x.rows(), p = x.cols();
    std::vector<double> eta(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = x.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < p; ++c) acc += row[c] * beta[c];
        eta[r] = acc;
    }
    const double eta_max = *std::max_element(eta.begin(), eta.end());

    CoxObjective obj;
    obj.grad.assign(p, 0.0);
    obj.hessian.resize(p, p);
    obj.hessian.fill(0.0);

    double s0 = 0.0;
    std::vector<double> s1(p, 0.0);
    Matrix s2(p, p, 0.0);

    std::size_t i = 0;
    while (i < order.size()) {
        const double t = labels.time[order[i]];
        std::size_t j = i;
        while (j < order.size() && labels.time[order[j]] == t) {
            const std::size_t idx = order[j];
            const double w = std::exp(eta[idx] - eta_max);
            const double* row = x.row(idx);
            s0 += w;
            for (std::size_t a = 0; a < p; ++a) {
                s1[a] += w * row[a];
                for (std::size_t b = a; b < p; ++b) s2(a, b) += w * row[a] * row[b];
            }
            ++j;
        }
        for (std::size_t m = i; m < j; ++m) {
            const std::size_t idx = order[m];
            if (!labels.event[idx]) continue;
            const double* row = x.row(idx);
            obj.ll += eta[idx] - (eta_max + std::log(s0));
            for (std::size_t a = 0; a < p; ++a) {
                const double mean_a = s1[a] / s0;
                obj.grad[a] += row[a] - mean_a;
                for (std::size_t b = a; b < p; ++b)
                    obj.hessian(a, b) += s2(a, b) / s0 - mean_a * (s1[b] / s0);
            }
        }
        i = j;
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) obj.hessian(a, b) = obj.hessian(b, a);

    if (penalty > 0.0) {
        for (std::size_t a = 0; a < p; ++a) {
            obj.ll -= 0.5 * penalty * beta[a] * beta[a];
            obj.grad[a] -= penalty * beta[a];
            obj.hessian(a, a) += penalty;
        }
    }
    return obj;
}

double unpenalized_ll(const Matrix& x, const data::SurvivalLabels& labels,
                      std::span<const double> beta,
                      const std::vector<std::size_t>& order) {
    return cox_objective(x, labels, beta, order, 0.0).ll;
}

}  // namespace

CoxModel cox_fit(const Matrix& x, const data::SurvivalLabels& labels, double penalty) {
    const std::size_t n = x.rows(), p = x.cols();
    check_labels(labels, n);
    if (p < 1) throw std::invalid_argument("no covariates");
    if (labels.n_events() == 0) throw DataError("no events");
    for (double v : x.values())
        if (!std::isfinite(v)) throw DataError("non-finite input");

    const auto order = desc_time_order(labels);

    CoxModel model;
    model.penalty = penalty;
    model.beta.assign(p, 0.0);
    model.standard_errors.assign(p, 0.0);

    constexpr int kMaxIter = 100;
    constexpr double kTol = 1e-7;

    CoxObjective obj = cox_objective(x, labels, model.beta, order, penalty);
    Matrix info(p, p);
    bool converged = false;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        auto chol = linalg::cholesky(obj.hessian);
        if (!chol) break;  // information not positive definite
        std::vector<double> step = linalg::cholesky_solve(*chol, obj.grad);

        // step-halving when the penalized likelihood would decrease
        double scale = 1.0;
        std::vector<double> candidate(p);
        CoxObjective next;
        bool improved = false;
        for (int half = 0; half < 30; ++half) {
            for (std::size_t a = 0; a < p; ++a)
                candidate[a] = model.beta[a] + scale * step[a];
            next = cox_objective(x, labels, candidate, order, penalty);
            if (std::isfinite(next.ll) && next.ll >= obj.ll - 1e-12) {
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) break;

        double max_delta = 0.0;
        for (std::size_t a = 0; a < p; ++a)
            max_delta = std::max(max_delta, std::abs(candidate[a] - model.beta[a]));
        model.beta = candidate;
        obj = std::move(next);
        if (max_delta < kTol) {
            converged = true;
            break;
        }
    }

    model.converged = converged;
    model.log_likelihood =
        penalty > 0.0 ? unpenalized_ll(x, labels, model.beta, order) : obj.ll;
    if (auto chol = linalg::cholesky(obj.hessian)) {
        Matrix cov = linalg::cholesky_inverse(*chol);
        for (std::size_t a = 0; a < p; ++a)
            model.standard_errors[a] = std::sqrt(std::max(cov(a, a), 0.0));
    } else {
        model.converged = false;
    }
    return model;
}

std::vector<double> cox_pvalues(const CoxModel& model) {
    if (!model.converged) throw std::invalid_argument("model not converged");
    std::vector<double> p(model.beta.size());
    for (std::size_t a = 0; a < p.size(); ++a) {
        const double se = model.standard_errors[a];
        p[a] = se > 0.0 ? linalg::wald_p(model.beta[a] / se) : 1.0;
    }
    return p;
}

std::vector<std::size_t> univariate_cox_select(const Matrix& fingerprints,
                                               const data::SurvivalLabels& labels,
                                               double alpha,
                                               double fallback_penalty) {
    const std::size_t n = fingerprints.rows(), f = fingerprints.cols();
    if (f < 1) throw std::invalid_argument("no fingerprints");
    std::vector<std::size_t> selected;
    Matrix column(n, 1);
    for (std::size_t c = 0; c < f; ++c) {
        double lo = fingerprints(0, c), hi = lo;
        for (std::size_t r = 1; r < n; ++r) {
            lo = std::min(lo, fingerprints(r, c));
            hi = std::max(hi, fingerprints(r, c));
        }
        if (hi - lo <= 1e-12) continue;  // constant: skip, counts toward fallback
        for (std::size_t r = 0; r < n; ++r) column(r, 0) = fingerprints(r, c);
        CoxModel m;
        try {
            m = cox_fit(column, labels, 0.0);
            if (!m.converged) m = cox_fit(column, labels, fallback_penalty);
        } catch (const std::exception&) {
            continue;
        }
        if (!m.converged) continue;
        if (cox_pvalues(m)[0] < alpha) selected.push_back(c);
    }
    if (selected.empty()) {
        selected.resize(f);
        std::iota(selected.begin(), selected.end(), std::size_t{0});
    }
    return selected;
}

CoxLoss cox_neural_loss(std::span<const double> log_h,
                        const data::SurvivalLabels& labels) {
    const std::size_t n = log_h.size();
    check_labels(labels, n);
    const std::size_t n_events = labels.n_events();
    if (n_events == 0) throw DataError("no events");
    for (double v : log_h)
        if (!std::isfinite(v)) throw DataError("non-finite log_h");

    const auto order = desc_time_order(labels);
    const double gamma = *std::max_element(log_h.begin(), log_h.end());

    // descending pass: risk-set denominators per tie block
    std::vector<double> block_log_s0;  // log-sum-exp (shifted) per tie block
    std::vector<std::size_t> block_end;
    double s0 = 0.0;
    std::size_t i = 0;
    while (i < n) {
        const double t = labels.time[order[i]];
        std::size_t j = i;
        while (j < n && labels.time[order[j]] == t) {
            s0 += std::exp(log_h[order[j]] - gamma);
            ++j;
        }
        block_log_s0.push_back(std::log(s0));
        block_end.push_back(j);
        i = j;
    }

    CoxLoss out;
    out.grad.assign(n, 0.0);
    const double inv_events = 1.0 / static_cast<double>(n_events);

    // ascending pass over blocks: loss terms and the running sum of
    // event 1/S0 that feeds every sample at or below the block's time
    double running = 0.0;
    std::size_t block = block_log_s0.size();
    double loss = 0.0;
    while (block-- > 0) {
        const std::size_t begin = block == 0 ? 0 : block_end[block - 1];
        const std::size_t end = block_end[block];
        const double s0_block = std::exp(block_log_s0[block]);
        for (std::size_t m = begin; m < end; ++m) {
            const std::size_t idx = order[m];
            if (labels.event[idx]) {
                loss -= (log_h[idx] - gamma) - block_log_s0[block];
                running += 1.0 / s0_block;
            }
        }
        for (std::size_t m = begin; m < end; ++m) {
            const std::size_t idx = order[m];
            const double e = labels.event[idx] ? 1.0 : 0.0;
            out.grad[idx] = (std::exp(log_h[idx] - gamma) * running - e) * inv_events;
        }
    }
    out.loss = loss * inv_events;
    return out;
}

}  // namespace coxfuse::surv
