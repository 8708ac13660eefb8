#include "bicsignal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bicsignal {

namespace {

struct JointCells {
    double p11, p10, p01;  // remaining mass is p00
};

JointCells joint_cells(double pa, double pb, double rho) {
    const double p11 = pa * pb + rho * std::sqrt(pa * (1 - pa) * pb * (1 - pb));
    return {p11, pa - p11, pb - p11};
}

}  // namespace

std::string SyntheticSpec::drug_id(std::size_t j) const {
    std::ostringstream ss;
    ss << drug_prefix << std::setw(p() > 100 ? 4 : 2) << std::setfill('0') << j;
    return ss.str();
}

void SyntheticSpec::validate() const {
    if (n == 0) throw std::invalid_argument("synthetic: n must be positive");
    for (std::size_t j = 0; j < p(); ++j)
        if (!(prevalence[j] > 0.0 && prevalence[j] < 1.0))
            throw std::invalid_argument("synthetic: prevalence of drug " + std::to_string(j) + " outside (0,1)");
    std::vector<bool> seen(p(), false);
    for (const auto& [j, beta] : effects) {
        if (j >= p()) throw std::invalid_argument("synthetic: effect on drug " + std::to_string(j) + " >= p");
        if (seen[j]) throw std::invalid_argument("synthetic: duplicate effect on drug " + std::to_string(j));
        if (!std::isfinite(beta)) throw std::invalid_argument("synthetic: non-finite coefficient");
        seen[j] = true;
    }
    std::vector<bool> blocked(p(), false);
    for (const auto& b : blocks) {
        if (b.first >= p() || b.second >= p() || b.first == b.second)
            throw std::invalid_argument("synthetic: co-prescription block needs two distinct drugs < p");
        if (blocked[b.first] || blocked[b.second])
            throw std::invalid_argument("synthetic: a drug may belong to one block only");
        blocked[b.first] = blocked[b.second] = true;
        const auto c = joint_cells(prevalence[b.first], prevalence[b.second], b.correlation);
        const double p00 = 1.0 - c.p11 - c.p10 - c.p01;
        if (c.p11 < 0 || c.p10 < 0 || c.p01 < 0 || p00 < 0)
            throw std::invalid_argument("synthetic: correlation infeasible for the block's prevalences");
    }
}

double event_probability(const SyntheticSpec& spec, std::span<const std::uint32_t> drugs_taken) {
    double eta = spec.intercept;
    for (const auto& [j, beta] : spec.effects)
        for (auto t : drugs_taken)
            if (t == j) eta += beta;
    return 1.0 / (1.0 + std::exp(-eta));
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t p = spec.p();

    SyntheticData out;
    out.intercept = spec.intercept;
    out.true_gamma.assign(p, 0);
    out.true_beta.assign(p, 0.0);
    for (const auto& [j, beta] : spec.effects) {
        out.true_gamma[j] = beta != 0.0;
        out.true_beta[j] = beta;
    }

    std::vector<int> block_of(p, -1);
    std::vector<JointCells> cells;
    for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
        block_of[spec.blocks[b].first] = static_cast<int>(b);
        block_of[spec.blocks[b].second] = static_cast<int>(b);
        cells.push_back(joint_cells(spec.prevalence[spec.blocks[b].first],
                                    spec.prevalence[spec.blocks[b].second], spec.blocks[b].correlation));
    }

    auto& x = out.data.reports;
    for (std::size_t j = 0; j < p; ++j) x.drug_ids.push_back(spec.drug_id(j));
    x.rows.resize(spec.n);
    x.report_ids.resize(spec.n);
    EventVector ev{spec.event_id, std::vector<std::uint8_t>(spec.n, 0)};

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        x.report_ids[i] = "R" + std::to_string(i);
        auto& row = x.rows[i];
        for (std::size_t j = 0; j < p; ++j) {
            const int b = block_of[j];
            if (b < 0) {
                if (unit(rng) < spec.prevalence[j]) row.push_back(static_cast<std::uint32_t>(j));
                continue;
            }
            const auto& blk = spec.blocks[static_cast<std::size_t>(b)];
            if (j != std::min(blk.first, blk.second)) continue;  // sampled with its partner
            const auto& c = cells[static_cast<std::size_t>(b)];
            const double u = unit(rng);
            const bool take_first = u < c.p11 + c.p10;
            const bool take_second = u < c.p11 || (u >= c.p11 + c.p10 && u < c.p11 + c.p10 + c.p01);
            if (take_first) row.push_back(blk.first);
            if (take_second) row.push_back(blk.second);
        }
        std::sort(row.begin(), row.end());

        double eta = spec.intercept;
        for (auto j : row) eta += out.true_beta[j];
        ev.y[i] = unit(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
    }
    out.data.events.push_back(std::move(ev));
    return out;
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
    const auto j = nlohmann::json::parse(json_text);
    SyntheticSpec s;
    s.n = j.at("n").get<std::size_t>();
    if (j.contains("prevalence")) {
        s.prevalence = j.at("prevalence").get<std::vector<double>>();
    } else {
        s.prevalence.assign(j.at("p").get<std::size_t>(), j.value("default_prevalence", 0.1));
    }
    if (j.contains("p") && j.at("p").get<std::size_t>() != s.prevalence.size())
        throw std::invalid_argument("synthetic: 'p' disagrees with the prevalence list");
    s.intercept = j.value("intercept", 0.0);
    for (const auto& e : j.value("effects", nlohmann::json::array()))
        s.effects.emplace_back(e.at("drug").get<std::uint32_t>(), e.at("beta").get<double>());
    for (const auto& b : j.value("blocks", nlohmann::json::array()))
        s.blocks.push_back({b.at("first").get<std::uint32_t>(), b.at("second").get<std::uint32_t>(),
                            b.at("correlation").get<double>()});
    s.event_id = j.value("event_id", std::string("E0"));
    s.drug_prefix = j.value("drug_prefix", std::string("D"));
    s.validate();
    return s;
}

std::string synthetic_spec_json(const SyntheticSpec& s) {
    nlohmann::json j;
    j["n"] = s.n;
    j["p"] = s.p();
    j["prevalence"] = s.prevalence;
    j["intercept"] = s.intercept;
    j["effects"] = nlohmann::json::array();
    for (const auto& [d, beta] : s.effects) j["effects"].push_back({{"drug", d}, {"beta", beta}});
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : s.blocks)
        j["blocks"].push_back({{"first", b.first}, {"second", b.second}, {"correlation", b.correlation}});
    j["event_id"] = s.event_id;
    j["drug_prefix"] = s.drug_prefix;
    return j.dump(2);
}

std::string truth_json(const SyntheticSpec& spec, const SyntheticData& generated, std::uint64_t seed) {
    nlohmann::json j;
    j["seed"] = seed;
    j["event_id"] = spec.event_id;
    j["intercept"] = generated.intercept;
    j["gamma"] = generated.true_gamma;
    j["support"] = nlohmann::json::array();
    j["coefficients"] = nlohmann::json::object();
    for (std::size_t d = 0; d < generated.true_gamma.size(); ++d) {
        if (!generated.true_gamma[d]) continue;
        j["support"].push_back(spec.drug_id(d));
        j["coefficients"][spec.drug_id(d)] = generated.true_beta[d];
    }
    return j.dump(2);
}

}  // namespace bicsignal
