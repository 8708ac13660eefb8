#pragma once

// Model search over binary inclusion vectors: Metropolis-Hastings random walk
// on Hamming balls with restarts, and exhaustive enumeration for small spaces.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <shared_mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bicsignal/dataset.hpp"
#include "bicsignal/logistic.hpp"

namespace bicsignal {

using Rng = std::mt19937_64;

/// Inclusion vector over the working (eligible) columns of an EventData.
class ModelVector {
public:
    ModelVector() = default;
    explicit ModelVector(std::size_t width) : bits_(width, 0) {}
    explicit ModelVector(std::vector<std::uint8_t> bits);

    static ModelVector from_mask(std::size_t width, std::uint64_t mask);

    std::size_t width() const noexcept { return bits_.size(); }
    bool operator[](std::size_t j) const { return bits_[j] != 0; }
    void flip(std::size_t j) { bits_[j] ^= 1U; }
    void set(std::size_t j, bool on) { bits_[j] = on ? 1U : 0U; }

    std::size_t size() const noexcept;  // |gamma|
    std::size_t nu() const noexcept { return size() + 1; }
    std::vector<std::uint32_t> selected() const;
    std::size_t hamming(const ModelVector& other) const;

    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    friend bool operator==(const ModelVector& a, const ModelVector& b) { return a.bits_ == b.bits_; }
    friend auto operator<=>(const ModelVector& a, const ModelVector& b) { return a.bits_ <=> b.bits_; }

    std::optional<double> score;  // cached BIC, not part of identity

private:
    std::vector<std::uint8_t> bits_;
};

struct ModelVectorHash {
    std::size_t operator()(const ModelVector& g) const noexcept;
};

/// Higher BIC wins, then fewer parameters, then the lexicographically
/// smaller inclusion vector.
bool better_model(double bic_a, const ModelVector& a, double bic_b, const ModelVector& b);

struct ChainConfig {
    std::size_t alpha = 5;
    std::size_t iterations = 5000;
    std::size_t restarts = 100;
    std::uint64_t seed = 0;
    std::size_t exhaustive_cutoff = 12;

    void validate() const;
};

/// Uniform draws from the Hamming ball of radius alpha. The flip count k is
/// drawn with probability proportional to C(width, k), then a uniform
/// k-subset of coordinates is flipped.
class NeighborProposal {
public:
    NeighborProposal(std::size_t width, std::size_t alpha);

    ModelVector operator()(const ModelVector& current, Rng& rng) const;
    std::size_t radius() const noexcept { return radius_; }
    /// |V_alpha|, as a double because it can be astronomically large.
    double ball_size() const noexcept { return ball_size_; }

private:
    std::size_t width_;
    std::size_t radius_;
    double ball_size_;
    std::vector<double> cumulative_;  // normalised CDF over k = 0..radius
};

ModelVector propose_neighbor(const ModelVector& gamma, std::size_t alpha, Rng& rng);

/// min(1, exp(bic_candidate - bic_current)); 0 for a -inf candidate.
/// Throws std::invalid_argument when bic_current is not finite.
double acceptance_prob(double bic_candidate, double bic_current);

/// Fits models on one EventData and memoises them. Safe to share across
/// threads: concurrent inserts of the same key store identical values.
class ModelScorer {
public:
    explicit ModelScorer(const EventData& data, FitOptions opts = {});

    std::shared_ptr<const FitResult> evaluate(const ModelVector& gamma) const;
    /// Fits without touching the cache.
    FitResult fit(const ModelVector& gamma) const;
    double score(const ModelVector& gamma) const { return evaluate(gamma)->bic; }

    const EventData& data() const noexcept { return *data_; }
    std::size_t width() const noexcept { return data_->width(); }
    std::size_t cache_size() const;
    std::size_t fits_computed() const;

private:
    const EventData* data_;
    FitOptions opts_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<ModelVector, std::shared_ptr<const FitResult>, ModelVectorHash> cache_;
    mutable std::atomic<std::size_t> fits_{0};
};

struct TraceRow {
    std::size_t iter;
    double bic_current;
    double bic_best;
    bool accepted;
};

struct ChainResult {
    ModelVector best;
    FitResult best_fit;
    std::vector<TraceRow> trace;
    std::size_t accepted = 0;
};

/// One run of the random walk. Returns the best model visited, including the
/// initial state. Row 0 of the trace is the initial state.
ChainResult run_chain(const ModelScorer& scorer, const ChainConfig& cfg, std::uint64_t chain_seed,
                      bool keep_trace = false);

/// Evaluates every model over at most 25 working columns.
std::pair<ModelVector, FitResult> exhaustive_search(const ModelScorer& scorer, unsigned threads = 1);

inline constexpr std::size_t kExhaustiveHardCap = 25;

struct SearchReport {
    ModelVector best_model;
    FitResult best_fit;
    std::vector<std::pair<std::size_t, double>> per_chain_best;
    std::size_t hit_count = 0;
    bool exhaustive = false;
    bool no_eligible_drugs = false;
    std::vector<std::vector<TraceRow>> traces;  // one per chain when requested
    std::size_t models_evaluated = 0;
};

/// Seed for chain `chain` derived from the run seed (splitmix64).
std::uint64_t chain_seed(std::uint64_t seed, std::size_t chain);

/// Exhaustive enumeration when width <= cfg.exhaustive_cutoff, otherwise
/// cfg.restarts independent chains with a deterministic reduction.
SearchReport search(const EventData& data, const ChainConfig& cfg, unsigned threads = 1,
                    bool keep_trace = false);

}  // namespace bicsignal
