#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coxfuse/data_model.hpp"
#include "coxfuse/matrix.hpp"

namespace coxfuse::surv {

struct CoxModel {
    std::vector<double> beta;
    std::vector<double> standard_errors;
    double log_likelihood = 0.0;  // unpenalized Breslow partial log-likelihood
    bool converged = false;
    double penalty = 0.0;
};

struct KmCurve {
    std::vector<double> event_times;  // ascending, distinct
    std::vector<double> survival;
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> events;
};

struct LogrankResult {
    double chi2 = 0.0;
    double p = 1.0;
};

struct CoxLoss {
    double loss = 0.0;
    std::vector<double> grad;  // d loss / d log_h, input order
};

// (CP + TP/2) / AP. A pair is admissible when both events are observed,
// or when exactly one event is observed and it is not later than the
// censoring time. Correct = the earlier event has strictly higher risk;
// prediction ties (and tied event times) count half.
double concordance_index(std::span<const double> predictions,
                         const data::SurvivalLabels& labels);

// Product-limit estimator over distinct event times. Censored-only times
// only reduce the at-risk counts.
KmCurve km_estimate(const data::SurvivalLabels& labels);

// Two-group logrank test; groups are 0/1 per sample. Chi-square with 1 dof.
LogrankResult logrank_test(const data::SurvivalLabels& labels,
                           std::span<const std::uint8_t> groups);

// Cox proportional hazards via Newton-Raphson on the Breslow partial
// log-likelihood minus (penalty/2)*|beta|^2. Step-halving on likelihood
// decrease; max 100 iterations; converged when max |step| < 1e-7.
CoxModel cox_fit(const Matrix& x, const data::SurvivalLabels& labels, double penalty);

// Two-sided Wald p-values per coefficient.
std::vector<double> cox_pvalues(const CoxModel& model);

// Screens each fingerprint with a single-covariate Cox fit (penalty 0,
// one retry at fallback_penalty on non-convergence) and keeps p < alpha.
// Constant fingerprints are skipped. Empty selection falls back to all.
std::vector<std::size_t> univariate_cox_select(const Matrix& fingerprints,
                                               const data::SurvivalLabels& labels,
                                               double alpha,
                                               double fallback_penalty = 0.1);

// Negative mean (over events) Breslow partial log-likelihood of log-hazards,
// with max-stabilized log-sum-exp. Differentiable: exact gradient included.
CoxLoss cox_neural_loss(std::span<const double> log_h,
                        const data::SurvivalLabels& labels);

}  // namespace coxfuse::surv
