#pragma once

// Scoring detected signals against a labelled reference set, and the
// per-event eligibility census.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bicsignal/dataset.hpp"

namespace bicsignal {

enum class ControlLabel { positive, negative, unknown };

std::string_view to_string(ControlLabel label);
ControlLabel parse_label(std::string_view text);

class ReferenceSet {
public:
    using Key = std::pair<std::string, std::string>;  // (event_id, drug_id)

    /// Throws SchemaError on a duplicate key.
    void add(std::string event_id, std::string drug_id, ControlLabel label);
    /// Pairs not in the set are unknown.
    ControlLabel label(const std::string& event_id, const std::string& drug_id) const;
    const std::map<Key, ControlLabel>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<Key, ControlLabel> entries_;
};

/// CSV `event_id,drug_id,label`; an optional header line starting with
/// `event_id` is skipped.
ReferenceSet parse_reference_set(std::string_view text, const std::string& source = "<memory>");
ReferenceSet load_reference_set(const std::filesystem::path& path);

/// Reference pairs whose event was not analysed or whose drug is absent from
/// the report matrix.
std::vector<ReferenceSet::Key> out_of_universe(const ReferenceSet& ref,
                                               const std::vector<std::string>& drug_ids,
                                               const std::vector<std::string>& event_ids);

struct DetectedSignal {
    std::string event_id;
    std::string drug_id;
};

struct MetricsRow {
    std::string method;
    std::size_t ns = 0;
    double rpc = 0.0;
    double rnc = 0.0;
    double rus = 0.0;
    bool empty = true;
};

MetricsRow score_signals(const std::vector<DetectedSignal>& signals, const ReferenceSet& ref,
                         std::string method = "Logistic BIC");

struct CensusRow {
    std::string event_id;
    std::size_t headcount;
    std::size_t p_eligible;
};

std::vector<CensusRow> eligibility_census(const ReportMatrix& x, const std::vector<EventVector>& events);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_census_csv(std::ostream& out, const std::vector<CensusRow>& rows);

}  // namespace bicsignal
