#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "bicsignal/logistic.hpp"
#include "oracles.hpp"

using namespace bicsignal;

namespace {

// n reports, `positives` of them with the event, no drugs.
ProfileTable intercept_only(std::uint64_t n, std::uint64_t positives) {
    ProfileTable pt;
    pt.width = 0;
    if (n - positives) {
        pt.outcomes.push_back(0);
        pt.weights.push_back(n - positives);
    }
    if (positives) {
        pt.outcomes.push_back(1);
        pt.weights.push_back(positives);
    }
    return pt;
}

std::vector<std::uint32_t> iota_n(std::size_t k) {
    std::vector<std::uint32_t> v(k);
    std::iota(v.begin(), v.end(), 0U);
    return v;
}

}  // namespace

TEST_CASE("loglik_weighted: closed forms") {
    auto pt = intercept_only(4, 2);
    CHECK(loglik_weighted(pt, {0.0, {}}) == doctest::Approx(-2.772588722239781).epsilon(1e-15));

    std::mt19937_64 rng(1);
    auto data = oracle::random_dataset(rng, 57, 4);
    auto full = compress_profiles(data.reports, data.events[0], iota_n(4));
    CHECK(loglik_weighted(full, {0.0, {0, 0, 0, 0}}) == doctest::Approx(-57 * std::log(2.0)).epsilon(1e-14));

    CHECK_THROWS_AS(loglik_weighted(full, {0.0, {1.0}}), std::invalid_argument);
}

TEST_CASE("property: weighted log-likelihood equals the row-by-row sum") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> coef(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 10 + rng() % 500, p = 1 + rng() % 20;
        auto data = oracle::random_dataset(rng, n, p, 0.1, 0.3);
        std::vector<std::uint32_t> drugs;
        for (std::uint32_t j = 0; j < p; ++j)
            if (rng() % 2) drugs.push_back(j);
        CoefficientVector beta{coef(rng), {}};
        for (std::size_t t = 0; t < drugs.size(); ++t) beta.slopes.push_back(coef(rng));
        auto pt = compress_profiles(data.reports, data.events[0], drugs);
        const double plain = oracle::plain_loglik(data.reports, data.events[0].y, drugs, beta.intercept, beta.slopes);
        CHECK(std::abs(loglik_weighted(pt, beta) - plain) <= 1e-10);
    }
}

TEST_CASE("property: analytic gradient matches central differences") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> coef(0.0, 0.7);
    for (int rep = 0; rep < 40; ++rep) {
        auto data = oracle::random_dataset(rng, 200 + rng() % 300, 6, 0.2, 0.3);
        auto pt = compress_profiles(data.reports, data.events[0], iota_n(6));
        CoefficientVector beta{coef(rng), {}};
        for (int t = 0; t < 6; ++t) beta.slopes.push_back(coef(rng));
        const auto g = gradient_weighted(pt, beta);
        const double h = 1e-5;
        for (std::size_t k = 0; k <= 6; ++k) {
            auto up = beta, down = beta;
            (k == 0 ? up.intercept : up.slopes[k - 1]) += h;
            (k == 0 ? down.intercept : down.slopes[k - 1]) -= h;
            const double fd = (loglik_weighted(pt, up) - loglik_weighted(pt, down)) / (2 * h);
            CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("fit_mle: intercept-only closed forms") {
    SUBCASE("n = 4, two positives") {
        auto fit = fit_mle(intercept_only(4, 2));
        CHECK(fit.converged);
        CHECK(fit.beta_hat.intercept == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(fit.bic == doctest::Approx(-3.4657359027997265).epsilon(1e-12));
        CHECK(fit.nu == 1);
    }
    SUBCASE("n = 10, three positives") {
        auto fit = fit_mle(intercept_only(10, 3));
        CHECK(fit.converged);
        CHECK(std::abs(fit.beta_hat.intercept - (-0.8472978603872037)) <= 1e-8);
    }
}

TEST_CASE("fit_mle: joint quasi-separation is detected") {
    // Both drugs pass the marginal four-cell check, but the event occurs only
    // when at least one is taken and always when both are: the additive MLE
    // does not exist.
    Dataset d;
    d.reports.drug_ids = {"A", "B"};
    d.reports.rows = {{}, {}, {}, {}, {}, {0}, {0}, {1}, {1}, {0, 1}};
    d.events.push_back({"E", {0, 0, 0, 0, 0, 1, 0, 1, 0, 1}});
    auto mask = eligibility_mask(d.reports, d.events[0]);
    REQUIRE(mask.p_eligible == 2);

    auto joint = fit_mle(compress_profiles(d.reports, d.events[0], std::vector<std::uint32_t>{0, 1}));
    CHECK_FALSE(joint.converged);
    CHECK(joint.bic == -std::numeric_limits<double>::infinity());

    auto single = fit_mle(compress_profiles(d.reports, d.events[0], std::vector<std::uint32_t>{0}));
    CHECK(single.converged);
    CHECK(std::isfinite(single.bic));
}

TEST_CASE("fit_mle: constant outcome diverges on the intercept") {
    auto fit = fit_mle(intercept_only(20, 0));
    CHECK_FALSE(fit.converged);
}

TEST_CASE("property: Newton iterates ascend and stop at a stationary point") {
    std::mt19937_64 rng(99);
    int converged = 0;
    for (int rep = 0; rep < 60; ++rep) {
        auto data = oracle::random_dataset(rng, 300 + rng() % 700, 8, 0.15, 0.25);
        auto mask = eligibility_mask(data.reports, data.events[0]);
        auto pt = compress_profiles(data.reports, data.events[0], mask.indices());
        auto fit = fit_mle(pt);
        for (std::size_t k = 1; k < fit.loglik_path.size(); ++k)
            CHECK(fit.loglik_path[k] >= fit.loglik_path[k - 1] - 1e-12 * std::abs(fit.loglik_path[k - 1]));
        if (!fit.converged) continue;
        ++converged;
        CHECK(fit.gradient_norm <= 1e-8);
        const auto g = gradient_weighted(pt, fit.beta_hat);
        for (double gk : g) CHECK(std::abs(gk) <= 1e-8);
        // BIC decomposition is exact as computed.
        CHECK(fit.bic == fit.loglik - 0.5 * static_cast<double>(fit.nu) * std::log(static_cast<double>(pt.n())));
    }
    CHECK(converged >= 50);
}

TEST_CASE("property: nested models never fit worse") {
    std::mt19937_64 rng(1234);
    for (int rep = 0; rep < 40; ++rep) {
        auto data = oracle::random_dataset(rng, 400, 10, 0.2, 0.3);
        auto mask = eligibility_mask(data.reports, data.events[0]);
        EventData working(data.reports, data.events[0], mask);
        std::vector<std::uint32_t> inner, outer;
        for (std::uint32_t k = 0; k < working.width(); ++k) {
            const auto r = rng() % 3;
            if (r == 0) inner.push_back(k);
            if (r <= 1) outer.push_back(k);
        }
        auto small = fit_mle(compress_profiles(working, inner));
        auto big = fit_mle(compress_profiles(working, outer));
        if (small.converged && big.converged) CHECK(big.loglik >= small.loglik - 1e-8);
    }
}

TEST_CASE("bic") {
    CHECK(bic(-2.772588722239781, 1, 4) == doctest::Approx(-3.4657359027997265).epsilon(1e-14));
    CHECK(bic(-12.5, 7, 1) == -12.5);
    CHECK_THROWS_AS(bic(-1.0, 1, 0), std::invalid_argument);
}

TEST_CASE("signal_coefficients") {
    FitResult fit;
    fit.converged = true;
    fit.beta_hat = {0.5, {2.1, -0.3}};
    std::vector<std::uint32_t> drugs{0, 1};
    auto signals = signal_coefficients(fit, drugs);
    REQUIRE(signals.size() == 1);
    CHECK(signals[0].drug == 0);
    CHECK(signals[0].coefficient == 2.1);

    fit.beta_hat = {0.0, {-1.0, -0.3}};
    CHECK(signal_coefficients(fit, drugs).empty());

    fit.beta_hat = {0.0, {0.4, 1.7, 0.9}};
    std::vector<std::uint32_t> three{10, 20, 30};
    auto ordered = signal_coefficients(fit, three);
    REQUIRE(ordered.size() == 3);
    CHECK(ordered[0].drug == 20);
    CHECK(ordered[1].drug == 30);
    CHECK(ordered[2].drug == 10);

    fit.converged = false;
    CHECK_THROWS_AS(signal_coefficients(fit, three), std::logic_error);
}
