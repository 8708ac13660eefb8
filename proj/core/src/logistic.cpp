#include "bicsignal/logistic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bicsignal {

namespace {

// ln(1 + e^eta) without overflow.
double softplus(double eta) {
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

void check_dims(const ProfileTable& pt, const CoefficientVector& beta) {
    if (beta.slopes.size() != pt.width)
        throw std::invalid_argument("coefficient count " + std::to_string(beta.slopes.size()) +
                                    " does not match model size " + std::to_string(pt.width));
}

double linear_predictor(const ProfileTable& pt, std::size_t i, const CoefficientVector& beta) {
    double eta = beta.intercept;
    const auto x = pt.profile(i);
    for (std::size_t t = 0; t < pt.width; ++t)
        if (x[t]) eta += beta.slopes[t];
    return eta;
}

double loglik_at(const ProfileTable& pt, const Eigen::VectorXd& eta) {
    double ll = 0.0;
    for (std::size_t i = 0; i < pt.m(); ++i) {
        const double w = static_cast<double>(pt.weights[i]);
        ll += w * (pt.outcomes[i] * eta[static_cast<Eigen::Index>(i)] - softplus(eta[static_cast<Eigen::Index>(i)]));
    }
    return ll;
}

CoefficientVector to_coefficients(const Eigen::VectorXd& b) {
    CoefficientVector c;
    c.intercept = b[0];
    c.slopes.assign(b.data() + 1, b.data() + b.size());
    return c;
}

}  // namespace

double loglik_weighted(const ProfileTable& pt, const CoefficientVector& beta) {
    check_dims(pt, beta);
    double ll = 0.0;
    for (std::size_t i = 0; i < pt.m(); ++i) {
        const double eta = linear_predictor(pt, i, beta);
        ll += static_cast<double>(pt.weights[i]) * (pt.outcomes[i] * eta - softplus(eta));
    }
    return ll;
}

std::vector<double> gradient_weighted(const ProfileTable& pt, const CoefficientVector& beta) {
    check_dims(pt, beta);
    std::vector<double> g(pt.width + 1, 0.0);
    for (std::size_t i = 0; i < pt.m(); ++i) {
        const double r = static_cast<double>(pt.weights[i]) *
                         (pt.outcomes[i] - sigmoid(linear_predictor(pt, i, beta)));
        g[0] += r;
        const auto x = pt.profile(i);
        for (std::size_t t = 0; t < pt.width; ++t)
            if (x[t]) g[t + 1] += r;
    }
    return g;
}

double bic(double loglik, std::size_t nu, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("bic: n must be >= 1");
    return loglik - 0.5 * static_cast<double>(nu) * std::log(static_cast<double>(n));
}

FitResult fit_mle(const ProfileTable& pt, const FitOptions& opts) {
    const std::uint64_t n = pt.n();
    if (n == 0) throw std::invalid_argument("empty dataset");

    const auto m = static_cast<Eigen::Index>(pt.m());
    const auto dim = static_cast<Eigen::Index>(pt.width + 1);

    Eigen::MatrixXd X(m, dim);
    Eigen::VectorXd y(m), w(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto row = pt.profile(static_cast<std::size_t>(i));
        X(i, 0) = 1.0;
        for (Eigen::Index t = 1; t < dim; ++t) X(i, t) = row[static_cast<std::size_t>(t - 1)];
        y[i] = pt.outcomes[static_cast<std::size_t>(i)];
        w[i] = static_cast<double>(pt.weights[static_cast<std::size_t>(i)]);
    }

    FitResult fit;
    fit.nu = pt.width + 1;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd eta = X * beta;
    double ll = loglik_at(pt, eta);
    fit.loglik_path.push_back(ll);

    auto gradient = [&](const Eigen::VectorXd& e, Eigen::VectorXd& prob) {
        prob = e.unaryExpr([](double v) { return sigmoid(v); });
        return Eigen::VectorXd(X.transpose() * (w.array() * (y - prob).array()).matrix());
    };

    Eigen::VectorXd prob;
    Eigen::VectorXd g = gradient(eta, prob);
    bool diverged = false;
    bool done = false;

    // A small gradient alone is not enough: along a separating direction the
    // gradient decays like exp(-|beta|) while the Newton step stays O(1), so
    // convergence also requires the next step to be negligible. Separated fits
    // then keep stepping until they cross the coefficient cap.
    while (fit.iterations < opts.max_iterations) {

        // Fisher information X' diag(w p (1-p)) X; solve with Levenberg damping if singular.
        const Eigen::VectorXd curvature = w.array() * prob.array() * (1.0 - prob.array());
        Eigen::MatrixXd info = X.transpose() * curvature.asDiagonal() * X;
        Eigen::VectorXd step;
        Eigen::LLT<Eigen::MatrixXd> llt(info);
        if (llt.info() == Eigen::Success) {
            step = llt.solve(g);
        } else {
            for (double ridge = opts.ridge_start; ridge <= opts.ridge_max; ridge *= 2.0) {
                Eigen::LLT<Eigen::MatrixXd> damped(info + ridge * Eigen::MatrixXd::Identity(dim, dim));
                if (damped.info() == Eigen::Success) {
                    step = damped.solve(g);
                    break;
                }
            }
        }
        if (step.size() == 0 || !step.allFinite()) break;

        const double step_norm = step.lpNorm<Eigen::Infinity>();
        if (g.lpNorm<Eigen::Infinity>() <= opts.gradient_tol && step_norm <= opts.step_tol) {
            // Take the final quadratic-convergence step when it does not hurt.
            const Eigen::VectorXd polished = beta + step;
            const Eigen::VectorXd eta_polished = X * polished;
            const double ll_polished = loglik_at(pt, eta_polished);
            if (std::isfinite(ll_polished) && ll_polished >= ll) {
                Eigen::VectorXd prob_polished;
                Eigen::VectorXd g_polished = gradient(eta_polished, prob_polished);
                if (g_polished.lpNorm<Eigen::Infinity>() <= g.lpNorm<Eigen::Infinity>()) {
                    beta = polished;
                    ll = ll_polished;
                    g = std::move(g_polished);
                    fit.loglik_path.push_back(ll);
                }
            }
            done = true;
            break;
        }
        ++fit.iterations;

        // Step halving until the log-likelihood does not decrease beyond
        // rounding noise.
        const double slack = 1e-13 * std::max(1.0, std::abs(ll));
        double scale = 1.0;
        Eigen::VectorXd candidate;
        double ll_new = ll;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h, scale *= 0.5) {
            candidate = beta + scale * step;
            eta = X * candidate;
            ll_new = loglik_at(pt, eta);
            if (std::isfinite(ll_new) && ll_new >= ll - slack) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        const double improvement = ll_new - ll;
        beta = candidate;
        ll = ll_new;
        fit.loglik_path.push_back(ll);
        g = gradient(eta, prob);

        if (beta.lpNorm<Eigen::Infinity>() > opts.coefficient_cap) {
            diverged = true;
            break;
        }
        if (scale == 1.0 && improvement <= opts.improvement_tol && step_norm <= opts.step_tol) {
            done = true;
            break;
        }
    }

    fit.beta_hat = to_coefficients(beta);
    fit.loglik = ll;
    fit.gradient_norm = g.lpNorm<Eigen::Infinity>();
    fit.converged = done && !diverged;
    fit.bic = fit.converged ? bic(ll, fit.nu, n) : -std::numeric_limits<double>::infinity();
    return fit;
}

std::vector<SignalCoefficient> signal_coefficients(const FitResult& fit,
                                                   std::span<const std::uint32_t> drugs) {
    if (!fit.converged) throw std::logic_error("signal_coefficients: fit did not converge");
    if (drugs.size() != fit.beta_hat.slopes.size())
        throw std::invalid_argument("signal_coefficients: drug map does not match model size");
    std::vector<SignalCoefficient> out;
    for (std::size_t t = 0; t < drugs.size(); ++t)
        if (fit.beta_hat.slopes[t] > 0.0) out.push_back({drugs[t], fit.beta_hat.slopes[t]});
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.coefficient > b.coefficient; });
    return out;
}

}  // namespace bicsignal
