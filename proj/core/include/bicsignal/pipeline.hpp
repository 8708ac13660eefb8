#pragma once

// End-to-end orchestration: ingest, per-event eligibility, model search,
// signals, baselines, metrics, and the run manifest.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bicsignal/dataset.hpp"
#include "bicsignal/search.hpp"
#include "bicsignal/synthetic.hpp"

namespace bicsignal {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kThreadsEnv = "BICSIGNAL_THREADS";

/// Thrown for invalid configurations, before any computation starts.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::filesystem::path reports;           // single-file format
    std::filesystem::path drug_triplets;     // two-file mode, used when `reports` is empty
    std::filesystem::path event_triplets;
    std::optional<std::filesystem::path> reference;
    std::vector<std::string> events;         // empty: every declared event
    ChainConfig chain;
    bool baselines = true;
    bool trace = false;
    std::filesystem::path out_dir = "out";
    unsigned threads = 0;                    // 0: hardware concurrency

    void validate() const;
};

struct EventSummary {
    std::string event_id;
    std::size_t headcount = 0;
    std::size_t p_eligible = 0;
    bool exhaustive = false;
    bool no_eligible_drugs = false;
    bool converged = false;
    std::size_t hit_count = 0;
    std::size_t models_evaluated = 0;
    double best_bic = 0.0;
    std::size_t model_size = 0;
    std::size_t unique_profiles = 0;
    std::size_t signals = 0;
    double seconds = 0.0;
};

struct RunSummary {
    std::vector<EventSummary> events;
    std::vector<std::filesystem::path> files;
};

/// Environment override first, then the request, then hardware concurrency.
unsigned resolve_threads(unsigned requested);

Dataset load_dataset(const RunConfig& cfg);

/// Writes signals.csv, metrics.csv, census.csv, baselines.csv (when enabled),
/// optional trace_<event>.csv files, and manifest.json into cfg.out_dir.
/// On failure every file written so far is removed and the error rethrown.
RunSummary run(const RunConfig& cfg, std::ostream* log = nullptr);

void write_baselines_csv(std::ostream& out, const Dataset& data, const std::vector<std::string>& events);
void write_trace_csv(std::ostream& out, const SearchReport& report);

std::string sha256_file(const std::filesystem::path& path);

/// Re-hashes every file listed in `dir/manifest.json`; returns the names of
/// files that are missing or whose hash differs.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

/// Writes the report file and a `<stem>.truth.json` sidecar next to it.
/// Returns the sidecar path.
std::filesystem::path write_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                                      const std::filesystem::path& reports_out);

}  // namespace bicsignal
