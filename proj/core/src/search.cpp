#include "bicsignal/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace bicsignal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kInitialDraws = 100;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace

ModelVector::ModelVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_)
        if (b > 1) throw std::invalid_argument("ModelVector entries must be 0 or 1");
}

ModelVector ModelVector::from_mask(std::size_t width, std::uint64_t mask) {
    ModelVector g(width);
    for (std::size_t j = 0; j < width && j < 64; ++j) g.bits_[j] = static_cast<std::uint8_t>((mask >> j) & 1U);
    return g;
}

std::size_t ModelVector::size() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::uint32_t> ModelVector::selected() const {
    std::vector<std::uint32_t> out;
    for (std::size_t j = 0; j < bits_.size(); ++j)
        if (bits_[j]) out.push_back(static_cast<std::uint32_t>(j));
    return out;
}

std::size_t ModelVector::hamming(const ModelVector& other) const {
    if (other.width() != width()) throw std::invalid_argument("hamming: width mismatch");
    std::size_t d = 0;
    for (std::size_t j = 0; j < bits_.size(); ++j) d += bits_[j] != other.bits_[j];
    return d;
}

std::size_t ModelVectorHash::operator()(const ModelVector& g) const noexcept {
    std::uint64_t h = g.width();
    std::uint64_t word = 0;
    const auto& bits = g.bits();
    for (std::size_t j = 0; j < bits.size(); ++j) {
        word |= std::uint64_t{bits[j]} << (j % 64);
        if (j % 64 == 63) {
            h = splitmix64(h ^ word);
            word = 0;
        }
    }
    return static_cast<std::size_t>(splitmix64(h ^ word));
}

bool better_model(double bic_a, const ModelVector& a, double bic_b, const ModelVector& b) {
    if (bic_a != bic_b) return bic_a > bic_b;
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

void ChainConfig::validate() const {
    if (alpha < 1) throw std::invalid_argument("alpha must be >= 1");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
}

NeighborProposal::NeighborProposal(std::size_t width, std::size_t alpha)
    : width_(width), radius_(std::min(alpha, width)) {
    if (alpha < 1) throw std::invalid_argument("alpha must be >= 1");
    // log C(width, k), normalised against the largest term.
    std::vector<double> logw(radius_ + 1);
    const double lw = std::lgamma(static_cast<double>(width) + 1.0);
    for (std::size_t k = 0; k <= radius_; ++k)
        logw[k] = lw - std::lgamma(static_cast<double>(k) + 1.0) -
                  std::lgamma(static_cast<double>(width - k) + 1.0);
    const double top = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    cumulative_.resize(radius_ + 1);
    for (std::size_t k = 0; k <= radius_; ++k) {
        total += std::exp(logw[k] - top);
        cumulative_[k] = total;
    }
    for (auto& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
    ball_size_ = total * std::exp(top);
}

ModelVector NeighborProposal::operator()(const ModelVector& current, Rng& rng) const {
    if (current.width() != width_) throw std::invalid_argument("proposal: width mismatch");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    const std::size_t k = static_cast<std::size_t>(
        std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());

    ModelVector next = current;
    next.score.reset();
    if (k == 0) return next;

    // Sequential distinct draws give a uniform k-subset.
    std::uniform_int_distribution<std::size_t> coord(0, width_ - 1);
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    while (chosen.size() < std::min(k, width_)) {
        const auto j = coord(rng);
        if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) chosen.push_back(j);
    }
    for (auto j : chosen) next.flip(j);
    return next;
}

ModelVector propose_neighbor(const ModelVector& gamma, std::size_t alpha, Rng& rng) {
    return NeighborProposal(gamma.width(), alpha)(gamma, rng);
}

double acceptance_prob(double bic_candidate, double bic_current) {
    if (!std::isfinite(bic_current))
        throw std::invalid_argument("acceptance_prob: current state must have a finite BIC");
    if (std::isnan(bic_candidate) || bic_candidate == kNegInf) return 0.0;
    const double delta = bic_candidate - bic_current;
    return delta >= 0.0 ? 1.0 : std::exp(delta);
}

ModelScorer::ModelScorer(const EventData& data, FitOptions opts) : data_(&data), opts_(opts) {}

FitResult ModelScorer::fit(const ModelVector& gamma) const {
    if (gamma.width() != data_->width()) throw std::invalid_argument("model width != working width");
    const auto selected = gamma.selected();
    ++fits_;
    return fit_mle(compress_profiles(*data_, selected), opts_);
}

std::shared_ptr<const FitResult> ModelScorer::evaluate(const ModelVector& gamma) const {
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(gamma); it != cache_.end()) return it->second;
    }
    auto result = std::make_shared<const FitResult>(fit(gamma));
    std::unique_lock lock(mutex_);
    ModelVector key = gamma;
    key.score = result->bic;
    return cache_.try_emplace(std::move(key), std::move(result)).first->second;
}

std::size_t ModelScorer::cache_size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

std::size_t ModelScorer::fits_computed() const { return fits_.load(); }

ChainResult run_chain(const ModelScorer& scorer, const ChainConfig& cfg, std::uint64_t seed,
                      bool keep_trace) {
    cfg.validate();
    const std::size_t width = scorer.width();
    Rng rng(seed);

    // Initial state: uniform over the hypercube, redrawn while the fit diverges.
    ModelVector current(width);
    std::shared_ptr<const FitResult> current_fit;
    std::bernoulli_distribution coin(0.5);
    for (int attempt = 0; attempt < kInitialDraws && width > 0; ++attempt) {
        ModelVector draw(width);
        for (std::size_t j = 0; j < width; ++j) draw.set(j, coin(rng));
        auto f = scorer.evaluate(draw);
        if (f->converged) {
            current = std::move(draw);
            current_fit = std::move(f);
            break;
        }
    }
    if (!current_fit) {
        current = ModelVector(width);
        current_fit = scorer.evaluate(current);
    }
    current.score = current_fit->bic;

    ChainResult out;
    ModelVector best = current;
    auto best_fit = current_fit;
    if (keep_trace) {
        out.trace.reserve(cfg.iterations + 1);
        out.trace.push_back({0, current_fit->bic, best_fit->bic, true});
    }

    if (width > 0 && std::isfinite(current_fit->bic)) {
        const NeighborProposal propose(width, cfg.alpha);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t r = 1; r <= cfg.iterations; ++r) {
            ModelVector candidate = propose(current, rng);
            bool accepted = true;
            if (candidate != current) {
                auto cand_fit = scorer.evaluate(candidate);
                const double rho = acceptance_prob(cand_fit->bic, current_fit->bic);
                accepted = rho >= 1.0 || unit(rng) < rho;
                if (accepted) {
                    current = std::move(candidate);
                    current.score = cand_fit->bic;
                    current_fit = std::move(cand_fit);
                    if (better_model(current_fit->bic, current, best_fit->bic, best)) {
                        best = current;
                        best_fit = current_fit;
                    }
                }
            }
            out.accepted += accepted;
            if (keep_trace) out.trace.push_back({r, current_fit->bic, best_fit->bic, accepted});
        }
    }

    out.best = std::move(best);
    out.best_fit = *best_fit;
    return out;
}

std::pair<ModelVector, FitResult> exhaustive_search(const ModelScorer& scorer, unsigned threads) {
    const std::size_t width = scorer.width();
    if (width > kExhaustiveHardCap)
        throw std::length_error("exhaustive search refused: " + std::to_string(width) +
                                " eligible drugs exceeds the cap of " + std::to_string(kExhaustiveHardCap));

    const std::uint64_t total = std::uint64_t{1} << width;
    threads = std::max(1U, threads);
    struct Best {
        ModelVector model;
        FitResult fit;
        bool any = false;
    };
    std::vector<Best> local(threads);

    parallel_for(threads, threads, [&](std::size_t t) {
        auto& mine = local[t];
        for (std::uint64_t mask = t; mask < total; mask += threads) {
            auto g = ModelVector::from_mask(width, mask);
            auto f = scorer.fit(g);
            if (!f.converged) continue;
            if (!mine.any || better_model(f.bic, g, mine.fit.bic, mine.model)) {
                mine.model = std::move(g);
                mine.fit = std::move(f);
                mine.any = true;
            }
        }
    });

    Best best;
    for (auto& b : local) {
        if (b.any && (!best.any || better_model(b.fit.bic, b.model, best.fit.bic, best.model)))
            best = std::move(b);
    }
    if (!best.any) {
        // Every model diverged; report the intercept-only fit as is.
        best.model = ModelVector(width);
        best.fit = scorer.fit(best.model);
    }
    best.model.score = best.fit.bic;
    return {std::move(best.model), std::move(best.fit)};
}

std::uint64_t chain_seed(std::uint64_t seed, std::size_t chain) {
    return splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(chain));
}

SearchReport search(const EventData& data, const ChainConfig& cfg, unsigned threads, bool keep_trace) {
    cfg.validate();
    ModelScorer scorer(data);
    SearchReport report;
    report.no_eligible_drugs = data.width() == 0;

    if (data.width() <= cfg.exhaustive_cutoff) {
        auto [model, fit] = exhaustive_search(scorer, threads);
        report.best_model = std::move(model);
        report.best_fit = std::move(fit);
        report.exhaustive = true;
        report.hit_count = cfg.restarts;
        report.models_evaluated = scorer.fits_computed();
        return report;
    }

    std::vector<ChainResult> chains(cfg.restarts);
    parallel_for(cfg.restarts, threads, [&](std::size_t c) {
        chains[c] = run_chain(scorer, cfg, chain_seed(cfg.seed, c), keep_trace);
    });

    std::size_t winner = 0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        report.per_chain_best.emplace_back(c, chains[c].best_fit.bic);
        if (c > 0 && better_model(chains[c].best_fit.bic, chains[c].best, chains[winner].best_fit.bic,
                                  chains[winner].best))
            winner = c;
    }
    report.best_model = chains[winner].best;
    report.best_fit = chains[winner].best_fit;
    for (const auto& ch : chains) report.hit_count += ch.best == report.best_model;
    if (keep_trace)
        for (auto& ch : chains) report.traces.push_back(std::move(ch.trace));
    report.models_evaluated = scorer.cache_size();
    return report;
}

}  // namespace bicsignal
