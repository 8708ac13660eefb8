#pragma once

// Constrained logistic regression on weighted profiles: log-likelihood,
// Newton-Raphson MLE, and the BIC score of a model.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bicsignal/dataset.hpp"

namespace bicsignal {

/// Intercept plus one slope per selected drug, in the ProfileTable's column
/// order. Drugs outside the model have an implicit zero coefficient.
struct CoefficientVector {
    double intercept = 0.0;
    std::vector<double> slopes;
};

struct FitOptions {
    double gradient_tol = 1e-8;
    double improvement_tol = 1e-12;
    double step_tol = 1e-5;           // Newton step max-norm required alongside a small gradient
    int max_iterations = 50;
    int max_halvings = 20;
    double coefficient_cap = 30.0;
    double ridge_start = 1e-6;
    double ridge_max = 1e2;
};

struct FitResult {
    CoefficientVector beta_hat;
    double loglik = -std::numeric_limits<double>::infinity();
    double bic = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    std::size_t nu = 1;          // 1 + |gamma|
    double gradient_norm = 0.0;  // max-norm at beta_hat
    std::vector<double> loglik_path;
};

/// sum_i w_i [y_i eta_i - ln(1 + exp(eta_i))], summed over profiles in order.
double loglik_weighted(const ProfileTable& pt, const CoefficientVector& beta);

/// Gradient of loglik_weighted: intercept first, then one entry per slope.
std::vector<double> gradient_weighted(const ProfileTable& pt, const CoefficientVector& beta);

/// loglik - (nu / 2) ln n.
double bic(double loglik, std::size_t nu, std::uint64_t n);

/// Newton-Raphson from beta = 0 with step halving. A fit whose slopes exceed
/// the coefficient cap, or that fails to converge, gets bic = -inf.
FitResult fit_mle(const ProfileTable& pt, const FitOptions& opts = {});

struct SignalCoefficient {
    std::uint32_t drug;  // index supplied by the caller's `drugs` map
    double coefficient;
};

/// Selected drugs with a strictly positive slope, by descending coefficient.
/// `drugs[t]` names the t-th slope. Throws std::logic_error on an
/// unconverged fit.
std::vector<SignalCoefficient> signal_coefficients(const FitResult& fit,
                                                   std::span<const std::uint32_t> drugs);

}  // namespace bicsignal
