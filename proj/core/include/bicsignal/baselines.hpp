#pragma once

// Disproportionality baselines on the 2x2 drug x event projection.
//
//                 event   no event
//     drug          a        b
//     no drug       c        d
//
// PRR and ROR p-values use the usual normal approximation on the log scale
// (Evans et al. and van Puijenbroek et al. variance forms). Signals require
// p < 0.05 and a minimum co-occurrence count of 3 (PRR, ROR) or 1 (RFET).

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "bicsignal/dataset.hpp"

namespace bicsignal {

struct ContingencyTable {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;

    std::uint64_t n() const noexcept { return a + b + c + d; }
    friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;
};

ContingencyTable project(const ReportMatrix& x, const EventVector& y, std::size_t drug);
/// Same projection from a precomputed drug column (sorted report indices).
ContingencyTable project(std::span<const std::uint32_t> column, const EventVector& y);

enum class BaselineMethod { PRR, ROR, RFET };

std::string_view to_string(BaselineMethod m);
unsigned minimum_count(BaselineMethod m);

struct DisproportionalityRatios {
    double prr;
    double ror;
};

/// Point statistics. A zero denominator yields +inf.
DisproportionalityRatios prr_ror(const ContingencyTable& t);

/// One-sided mid-p: P(A > a) + P(A = a) / 2 with A hypergeometric given the
/// table margins.
double fisher_mid_p(const ContingencyTable& t);

struct BaselineResult {
    BaselineMethod method;
    double statistic;
    double pvalue;
    bool signaled;
};

inline constexpr double kBaselineThreshold = 0.05;

/// One-sided normal p-value for ln(PRR) > 0; Haldane-corrected when a cell is 0.
double prr_pvalue(const ContingencyTable& t);
/// One-sided normal p-value for ln(ROR) > 0; Haldane-corrected when a cell is 0.
double ror_pvalue(const ContingencyTable& t);

BaselineResult evaluate_baseline(const ContingencyTable& t, BaselineMethod method);
std::array<BaselineResult, 3> evaluate_baselines(const ContingencyTable& t);

}  // namespace bicsignal
