#pragma once

// Planted-truth data generator used for verification runs.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bicsignal/dataset.hpp"

namespace bicsignal {

/// Two drugs sampled jointly with the given Pearson correlation of their
/// indicators; marginals stay at their prevalences.
struct CoPrescription {
    std::uint32_t first;
    std::uint32_t second;
    double correlation;
};

struct SyntheticSpec {
    std::size_t n = 0;
    std::vector<double> prevalence;                          // length p
    double intercept = 0.0;                                  // beta_0
    std::vector<std::pair<std::uint32_t, double>> effects;   // true support with coefficients
    std::vector<CoPrescription> blocks;
    std::string event_id = "E0";
    std::string drug_prefix = "D";

    std::size_t p() const noexcept { return prevalence.size(); }
    std::string drug_id(std::size_t j) const;
    /// Throws std::invalid_argument when a probability leaves (0,1), the
    /// support leaves [0,p), or a block is infeasible.
    void validate() const;
};

struct SyntheticData {
    Dataset data;
    std::vector<std::uint8_t> true_gamma;  // length p
    std::vector<double> true_beta;         // length p, zeros off the support
    double intercept = 0.0;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// P(y = 1 | drugs) under the spec's logistic model.
double event_probability(const SyntheticSpec& spec, std::span<const std::uint32_t> drugs_taken);

SyntheticSpec parse_synthetic_spec(std::string_view json_text);
std::string synthetic_spec_json(const SyntheticSpec& spec);
/// Ground-truth sidecar: event id, intercept, true support and coefficients.
std::string truth_json(const SyntheticSpec& spec, const SyntheticData& generated, std::uint64_t seed);

}  // namespace bicsignal
