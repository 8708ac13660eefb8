#pragma once

// Spontaneous-report data: the binary drug-consumption matrix, per-event
// outcome vectors, the MLE-existence eligibility filter, and the working
// column view used by the model search.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bicsignal {

/// Malformed input line. Carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input that parses but violates the data schema (undeclared ids, duplicates).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// n x p sparse binary matrix; row i lists the drugs consumed in report i.
struct ReportMatrix {
    std::vector<std::string> report_ids;
    std::vector<std::string> drug_ids;
    std::vector<std::vector<std::uint32_t>> rows;

    std::size_t n() const noexcept { return rows.size(); }
    std::size_t p() const noexcept { return drug_ids.size(); }

    /// Throws SchemaError when an index is out of range, a row repeats a
    /// drug, or drug ids collide.
    void validate() const;

    /// Transposed view: for every drug, the sorted list of reports taking it.
    std::vector<std::vector<std::uint32_t>> columns() const;

    std::size_t drug_index(const std::string& id) const;
};

struct EventVector {
    std::string event_id;
    std::vector<std::uint8_t> y;

    std::size_t headcount() const noexcept;
};

struct Dataset {
    ReportMatrix reports;
    std::vector<EventVector> events;

    const EventVector& event(const std::string& id) const;
};

/// Single-file format:
///
///     #drugs: D1,D2,...
///     #events: E1,E2,...
///     report_id,drug;drug;...,event;event;...
///
/// Blank lines are skipped. Either list field may be empty.
Dataset load_reports(const std::filesystem::path& path);
Dataset parse_reports(std::string_view text, const std::string& source = "<memory>");

/// Two-file mode: `report_id,drug_id,value` and `report_id,event_id,value`
/// sparse triplets with value in {0,1}. An optional header line whose first
/// field is `report_id` is skipped. Ids are numbered in first-appearance order.
Dataset load_triplets(const std::filesystem::path& drugs_path,
                      const std::filesystem::path& events_path);
Dataset parse_triplets(std::string_view drugs_text, std::string_view events_text);

void write_reports(std::ostream& out, const Dataset& data);

struct EligibilityMask {
    std::vector<bool> eligible;
    std::size_t p_eligible = 0;

    std::vector<std::uint32_t> indices() const;
};

/// A drug is eligible when, among reports with the event and among reports
/// without it, the drug is both taken and not taken at least once.
EligibilityMask eligibility_mask(const ReportMatrix& x, const EventVector& y);

/// The column subset of one ReportMatrix regressed against one event.
/// Working index k refers to original drug `drug_index[k]`.
class EventData {
public:
    EventData(const ReportMatrix& x, const EventVector& y, std::span<const std::uint32_t> drugs);
    EventData(const ReportMatrix& x, const EventVector& y, const EligibilityMask& mask);

    std::size_t n() const noexcept { return y_.size(); }
    std::size_t width() const noexcept { return columns_.size(); }
    std::size_t positives() const noexcept { return positives_; }

    std::span<const std::uint8_t> outcomes() const noexcept { return y_; }
    std::span<const std::uint32_t> column(std::size_t k) const { return columns_.at(k); }
    std::uint32_t drug_index(std::size_t k) const { return drug_index_.at(k); }
    std::span<const std::uint32_t> drug_indices() const noexcept { return drug_index_; }

private:
    std::vector<std::uint8_t> y_;
    std::vector<std::vector<std::uint32_t>> columns_;
    std::vector<std::uint32_t> drug_index_;
    std::size_t positives_ = 0;
};

/// Unique (restricted covariates, outcome) profiles with multiplicities.
/// Profiles are stored in ascending order of their bit-packed key.
struct ProfileTable {
    std::size_t width = 0;                  // |gamma|
    std::vector<std::uint8_t> covariates;   // m x width, row-major
    std::vector<std::uint8_t> outcomes;     // m
    std::vector<std::uint64_t> weights;     // m

    std::size_t m() const noexcept { return outcomes.size(); }
    std::uint64_t n() const noexcept;
    std::span<const std::uint8_t> profile(std::size_t i) const {
        return std::span<const std::uint8_t>(covariates).subspan(i * width, width);
    }
};

/// Groups reports by their restriction to the selected working columns
/// plus the outcome bit.
ProfileTable compress_profiles(const EventData& data, std::span<const std::uint32_t> selected);

/// Convenience form over the raw matrix; `drugs` are original drug indices.
ProfileTable compress_profiles(const ReportMatrix& x, const EventVector& y,
                               std::span<const std::uint32_t> drugs);

}  // namespace bicsignal
