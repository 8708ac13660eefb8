#include "bicsignal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bicsignal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double upper_normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

struct RealTable {
    double a, b, c, d;
};

// Haldane-Anscombe: add 0.5 to every cell when any cell is empty.
RealTable corrected(const ContingencyTable& t) {
    const bool zero = t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0;
    const double k = zero ? 0.5 : 0.0;
    return {static_cast<double>(t.a) + k, static_cast<double>(t.b) + k, static_cast<double>(t.c) + k,
            static_cast<double>(t.d) + k};
}

}  // namespace

ContingencyTable project(std::span<const std::uint32_t> column, const EventVector& y) {
    ContingencyTable t;
    const std::uint64_t n = y.y.size();
    const std::uint64_t positives = y.headcount();
    for (auto i : column) {
        if (i >= n) throw std::out_of_range("project: report index out of range");
        ++(y.y[i] ? t.a : t.b);
    }
    t.c = positives - t.a;
    t.d = n - positives - t.b;
    return t;
}

ContingencyTable project(const ReportMatrix& x, const EventVector& y, std::size_t drug) {
    if (drug >= x.p()) throw std::out_of_range("project: drug index out of range");
    if (y.y.size() != x.n()) throw std::invalid_argument("project: event length != n");
    std::vector<std::uint32_t> column;
    for (std::size_t i = 0; i < x.n(); ++i)
        if (std::find(x.rows[i].begin(), x.rows[i].end(), drug) != x.rows[i].end())
            column.push_back(static_cast<std::uint32_t>(i));
    return project(column, y);
}

std::string_view to_string(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::PRR: return "PRR";
        case BaselineMethod::ROR: return "ROR";
        case BaselineMethod::RFET: return "RFET";
    }
    return "?";
}

unsigned minimum_count(BaselineMethod m) { return m == BaselineMethod::RFET ? 1U : 3U; }

DisproportionalityRatios prr_ror(const ContingencyTable& t) {
    const double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
    const double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
    DisproportionalityRatios r{kInf, kInf};
    if (t.a + t.b > 0 && t.c > 0) r.prr = (a / (a + b)) / (c / (c + d));
    if (t.b > 0 && t.c > 0) r.ror = (a * d) / (b * c);
    return r;
}

double prr_pvalue(const ContingencyTable& t) {
    const auto [a, b, c, d] = corrected(t);
    if (a + b == 0.0 || c == 0.0) return 1.0;
    const double log_prr = std::log((a / (a + b)) / (c / (c + d)));
    const double se = std::sqrt(1.0 / a - 1.0 / (a + b) + 1.0 / c - 1.0 / (c + d));
    if (!(se > 0.0)) return log_prr > 0.0 ? 0.0 : 1.0;
    return upper_normal_tail(log_prr / se);
}

double ror_pvalue(const ContingencyTable& t) {
    const auto [a, b, c, d] = corrected(t);
    if (b == 0.0 || c == 0.0 || a == 0.0 || d == 0.0) return 1.0;
    const double log_ror = std::log((a * d) / (b * c));
    const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
    return upper_normal_tail(log_ror / se);
}

double fisher_mid_p(const ContingencyTable& t) {
    // A ~ Hypergeometric(N, R = a + b drug takers, C = a + c event cases).
    // Weights are built outward from the mode by the pmf ratio
    //   p(k+1) / p(k) = (R - k)(C - k) / ((k + 1)(N - R - C + k + 1))
    // and normalised by their sum, so no term can overflow.
    const double N = static_cast<double>(t.n());
    const std::uint64_t R = t.a + t.b, C = t.a + t.c;
    const std::uint64_t lo = (R + C > t.n()) ? R + C - t.n() : 0;
    const std::uint64_t hi = std::min(R, C);
    const double Rd = static_cast<double>(R), Cd = static_cast<double>(C);

    auto ratio_up = [&](std::uint64_t k) {
        const double kd = static_cast<double>(k);
        return (Rd - kd) * (Cd - kd) / ((kd + 1.0) * (N - Rd - Cd + kd + 1.0));
    };

    std::uint64_t mode = static_cast<std::uint64_t>((Rd + 1.0) * (Cd + 1.0) / (N + 2.0));
    mode = std::clamp(mode, lo, hi);

    std::vector<double> w(hi - lo + 1, 0.0);
    w[mode - lo] = 1.0;
    for (std::uint64_t k = mode; k < hi; ++k) {
        w[k + 1 - lo] = w[k - lo] * ratio_up(k);
        if (w[k + 1 - lo] == 0.0) break;
    }
    for (std::uint64_t k = mode; k > lo; --k) {
        w[k - 1 - lo] = w[k - lo] / ratio_up(k - 1);
        if (w[k - 1 - lo] == 0.0) break;
    }

    double total = 0.0, above = 0.0;
    for (std::uint64_t k = lo; k <= hi; ++k) {
        total += w[k - lo];
        if (k > t.a) above += w[k - lo];
    }
    const double at = w[t.a - lo];
    return std::clamp((above + 0.5 * at) / total, 0.0, 1.0);
}

BaselineResult evaluate_baseline(const ContingencyTable& t, BaselineMethod method) {
    BaselineResult r{method, 0.0, 1.0, false};
    switch (method) {
        case BaselineMethod::PRR:
            r.statistic = prr_ror(t).prr;
            r.pvalue = prr_pvalue(t);
            break;
        case BaselineMethod::ROR:
            r.statistic = prr_ror(t).ror;
            r.pvalue = ror_pvalue(t);
            break;
        case BaselineMethod::RFET:
            r.pvalue = fisher_mid_p(t);
            r.statistic = r.pvalue;
            break;
    }
    r.signaled = std::isfinite(r.statistic) && t.a >= minimum_count(method) && r.pvalue < kBaselineThreshold;
    return r;
}

std::array<BaselineResult, 3> evaluate_baselines(const ContingencyTable& t) {
    return {evaluate_baseline(t, BaselineMethod::PRR), evaluate_baseline(t, BaselineMethod::ROR),
            evaluate_baseline(t, BaselineMethod::RFET)};
}

}  // namespace bicsignal
