#include "bicsignal/eval.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "text.hpp"

namespace bicsignal {

std::string_view to_string(ControlLabel label) {
    switch (label) {
        case ControlLabel::positive: return "positive";
        case ControlLabel::negative: return "negative";
        case ControlLabel::unknown: return "unknown";
    }
    return "unknown";
}

ControlLabel parse_label(std::string_view text) {
    if (text == "positive") return ControlLabel::positive;
    if (text == "negative") return ControlLabel::negative;
    if (text == "unknown") return ControlLabel::unknown;
    throw std::invalid_argument("label must be positive, negative or unknown, got '" + std::string(text) + "'");
}

void ReferenceSet::add(std::string event_id, std::string drug_id, ControlLabel label) {
    Key key{std::move(event_id), std::move(drug_id)};
    if (!entries_.emplace(key, label).second)
        throw SchemaError("duplicate reference pair (" + key.first + ", " + key.second + ")");
}

ControlLabel ReferenceSet::label(const std::string& event_id, const std::string& drug_id) const {
    auto it = entries_.find(Key{event_id, drug_id});
    return it == entries_.end() ? ControlLabel::unknown : it->second;
}

ReferenceSet parse_reference_set(std::string_view text, const std::string& source) {
    ReferenceSet ref;
    std::size_t line_no = 0;
    for (auto raw : detail::lines(text)) {
        ++line_no;
        auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto fields = detail::split(line, ',');
        if (fields.size() != 3)
            throw ParseError(source, line_no, "expected 'event_id,drug_id,label'");
        auto event = detail::trim(fields[0]);
        if (event == "event_id" && ref.size() == 0) continue;
        auto drug = detail::trim(fields[1]);
        if (event.empty() || drug.empty()) throw ParseError(source, line_no, "empty id");
        ControlLabel label;
        try {
            label = parse_label(detail::trim(fields[2]));
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, line_no, e.what());
        }
        ref.add(std::string(event), std::string(drug), label);
    }
    return ref;
}

ReferenceSet load_reference_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open reference set '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_reference_set(ss.str(), path.string());
}

std::vector<ReferenceSet::Key> out_of_universe(const ReferenceSet& ref,
                                               const std::vector<std::string>& drug_ids,
                                               const std::vector<std::string>& event_ids) {
    const std::set<std::string> drugs(drug_ids.begin(), drug_ids.end());
    const std::set<std::string> events(event_ids.begin(), event_ids.end());
    std::vector<ReferenceSet::Key> out;
    for (const auto& [key, label] : ref.entries())
        if (!events.count(key.first) || !drugs.count(key.second)) out.push_back(key);
    return out;
}

MetricsRow score_signals(const std::vector<DetectedSignal>& signals, const ReferenceSet& ref,
                         std::string method) {
    MetricsRow row;
    row.method = std::move(method);
    row.ns = signals.size();
    row.empty = signals.empty();
    if (row.empty) return row;

    std::size_t pos = 0, neg = 0, unk = 0;
    for (const auto& s : signals) {
        switch (ref.label(s.event_id, s.drug_id)) {
            case ControlLabel::positive: ++pos; break;
            case ControlLabel::negative: ++neg; break;
            case ControlLabel::unknown: ++unk; break;
        }
    }
    const double ns = static_cast<double>(row.ns);
    row.rpc = static_cast<double>(pos) / ns;
    row.rnc = static_cast<double>(neg) / ns;
    row.rus = static_cast<double>(unk) / ns;
    return row;
}

std::vector<CensusRow> eligibility_census(const ReportMatrix& x, const std::vector<EventVector>& events) {
    std::vector<CensusRow> out;
    out.reserve(events.size());
    for (const auto& e : events)
        out.push_back({e.event_id, e.headcount(), eligibility_mask(x, e).p_eligible});
    return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << "method,ns,rpc,rnc,rus\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.ns << ',' << detail::format_real(r.rpc, 6) << ','
            << detail::format_real(r.rnc, 6) << ',' << detail::format_real(r.rus, 6) << '\n';
}

void write_census_csv(std::ostream& out, const std::vector<CensusRow>& rows) {
    out << "event,headcount,p_eligible\n";
    for (const auto& r : rows) out << r.event_id << ',' << r.headcount << ',' << r.p_eligible << '\n';
}

}  // namespace bicsignal
