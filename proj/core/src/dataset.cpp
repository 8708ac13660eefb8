#include "bicsignal/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "text.hpp"

namespace bicsignal {

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

void ReportMatrix::validate() const {
    if (!report_ids.empty() && report_ids.size() != rows.size())
        throw SchemaError("report id count does not match row count");
    std::unordered_set<std::string> seen;
    for (const auto& id : drug_ids)
        if (!seen.insert(id).second) throw SchemaError("duplicate drug id '" + id + "'");
    seen.clear();
    for (const auto& id : report_ids)
        if (!seen.insert(id).second) throw SchemaError("duplicate report id '" + id + "'");

    std::vector<std::uint32_t> scratch;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        scratch = rows[i];
        std::sort(scratch.begin(), scratch.end());
        if (!scratch.empty() && scratch.back() >= p())
            throw SchemaError("row " + std::to_string(i) + " references drug index " +
                              std::to_string(scratch.back()) + " >= p");
        if (std::adjacent_find(scratch.begin(), scratch.end()) != scratch.end())
            throw SchemaError("row " + std::to_string(i) + " repeats a drug");
    }
}

std::vector<std::vector<std::uint32_t>> ReportMatrix::columns() const {
    std::vector<std::vector<std::uint32_t>> cols(p());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (auto j : rows[i]) cols[j].push_back(static_cast<std::uint32_t>(i));
    return cols;
}

std::size_t ReportMatrix::drug_index(const std::string& id) const {
    auto it = std::find(drug_ids.begin(), drug_ids.end(), id);
    if (it == drug_ids.end()) throw SchemaError("unknown drug '" + id + "'");
    return static_cast<std::size_t>(it - drug_ids.begin());
}

std::size_t EventVector::headcount() const noexcept {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), std::uint8_t{1}));
}

const EventVector& Dataset::event(const std::string& id) const {
    for (const auto& e : events)
        if (e.event_id == id) return e;
    throw SchemaError("unknown event '" + id + "'");
}

namespace {

std::vector<std::string> parse_id_list(std::string_view body, char sep) {
    std::vector<std::string> ids;
    if (detail::trim(body).empty()) return ids;
    for (auto field : detail::split(body, sep)) ids.emplace_back(detail::trim(field));
    return ids;
}

std::unordered_map<std::string, std::uint32_t> index_ids(const std::vector<std::string>& ids,
                                                          const char* what) {
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (ids[k].empty()) throw SchemaError(std::string("empty ") + what + " id in header");
        if (!index.emplace(ids[k], static_cast<std::uint32_t>(k)).second)
            throw SchemaError(std::string("duplicate ") + what + " id '" + ids[k] + "'");
    }
    return index;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

Dataset parse_reports(std::string_view text, const std::string& source) {
    std::vector<std::string> drugs, events;
    bool have_drugs = false, have_events = false;
    std::unordered_map<std::string, std::uint32_t> drug_index, event_index;

    Dataset data;
    std::vector<std::vector<std::uint32_t>> event_rows;
    std::unordered_set<std::string> report_seen;

    std::size_t line_no = 0;
    for (auto raw : detail::lines(text)) {
        ++line_no;
        auto line = detail::trim(raw);
        if (line.empty()) continue;

        if (line.front() == '#') {
            auto colon = line.find(':');
            auto key = detail::trim(line.substr(1, colon == std::string_view::npos ? line.npos : colon - 1));
            if (key == "drugs" || key == "events") {
                if (colon == std::string_view::npos)
                    throw ParseError(source, line_no, "header '#" + std::string(key) + "' lacks ':'");
                if (!data.reports.rows.empty())
                    throw ParseError(source, line_no, "header after the first report line");
                auto ids = parse_id_list(line.substr(colon + 1), ',');
                if (key == "drugs") {
                    if (have_drugs) throw ParseError(source, line_no, "repeated #drugs header");
                    drugs = std::move(ids);
                    drug_index = index_ids(drugs, "drug");
                    have_drugs = true;
                } else {
                    if (have_events) throw ParseError(source, line_no, "repeated #events header");
                    events = std::move(ids);
                    event_index = index_ids(events, "event");
                    have_events = true;
                }
            }
            continue;  // other '#' lines are comments
        }

        if (!have_drugs || !have_events)
            throw ParseError(source, line_no, "report line before #drugs and #events headers");

        auto fields = detail::split(line, ',');
        if (fields.size() != 3)
            throw ParseError(source, line_no,
                             "expected 3 fields 'report_id,drugs,events', got " +
                                 std::to_string(fields.size()));
        std::string report_id(detail::trim(fields[0]));
        if (report_id.empty()) throw ParseError(source, line_no, "empty report id");
        if (!report_seen.insert(report_id).second)
            throw SchemaError(source + ":" + std::to_string(line_no) + ": duplicate report id '" +
                              report_id + "'");

        auto resolve = [&](std::string_view field, const auto& index, const char* what) {
            std::vector<std::uint32_t> out;
            for (const auto& id : parse_id_list(field, ';')) {
                if (id.empty()) throw ParseError(source, line_no, std::string("empty ") + what + " id");
                auto it = index.find(id);
                if (it == index.end())
                    throw SchemaError(source + ":" + std::to_string(line_no) + ": undeclared " + what +
                                      " '" + id + "'");
                if (std::find(out.begin(), out.end(), it->second) != out.end())
                    throw SchemaError(source + ":" + std::to_string(line_no) + ": " + what + " '" + id +
                                      "' listed twice");
                out.push_back(it->second);
            }
            std::sort(out.begin(), out.end());
            return out;
        };

        data.reports.report_ids.push_back(std::move(report_id));
        data.reports.rows.push_back(resolve(fields[1], drug_index, "drug"));
        event_rows.push_back(resolve(fields[2], event_index, "event"));
    }

    if (!have_drugs) throw ParseError(source, line_no, "missing #drugs header");
    if (!have_events) throw ParseError(source, line_no, "missing #events header");

    data.reports.drug_ids = std::move(drugs);
    const std::size_t n = data.reports.rows.size();
    data.events.resize(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        data.events[e].event_id = events[e];
        data.events[e].y.assign(n, 0);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (auto e : event_rows[i]) data.events[e].y[i] = 1;
    return data;
}

Dataset load_reports(const std::filesystem::path& path) {
    return parse_reports(read_file(path), path.string());
}

namespace {

struct Triplet {
    std::string row;
    std::string col;
    bool present;  // explicit zeros still declare their report and id
};

std::vector<Triplet> parse_triplet_text(std::string_view text, const std::string& source) {
    std::vector<Triplet> out;
    std::size_t line_no = 0;
    for (auto raw : detail::lines(text)) {
        ++line_no;
        auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto fields = detail::split(line, ',');
        if (fields.size() != 3)
            throw ParseError(source, line_no, "expected 3 fields 'report_id,id,value', got " +
                                                  std::to_string(fields.size()));
        auto row = detail::trim(fields[0]);
        auto col = detail::trim(fields[1]);
        auto value = detail::trim(fields[2]);
        if (out.empty() && line_no == 1 && row == "report_id") continue;
        if (row.empty() || col.empty()) throw ParseError(source, line_no, "empty id");
        if (value != "0" && value != "1")
            throw ParseError(source, line_no, "value must be 0 or 1, got '" + std::string(value) + "'");
        out.push_back({std::string(row), std::string(col), value == "1"});
    }
    return out;
}

}  // namespace

Dataset parse_triplets(std::string_view drugs_text, std::string_view events_text) {
    auto drug_triplets = parse_triplet_text(drugs_text, "<drugs>");
    auto event_triplets = parse_triplet_text(events_text, "<events>");

    Dataset data;
    std::unordered_map<std::string, std::uint32_t> report_index, drug_index, event_index;
    auto intern = [](auto& index, std::vector<std::string>& ids, const std::string& id) {
        auto [it, inserted] = index.emplace(id, static_cast<std::uint32_t>(ids.size()));
        if (inserted) ids.push_back(id);
        return it->second;
    };

    std::vector<std::string> event_ids;
    for (const auto& t : drug_triplets) intern(report_index, data.reports.report_ids, t.row);
    for (const auto& t : event_triplets) intern(report_index, data.reports.report_ids, t.row);

    const std::size_t n = data.reports.report_ids.size();
    data.reports.rows.assign(n, {});
    for (const auto& t : drug_triplets) {
        auto i = report_index.at(t.row);
        auto j = intern(drug_index, data.reports.drug_ids, t.col);
        if (!t.present) continue;
        auto& row = data.reports.rows[i];
        if (std::find(row.begin(), row.end(), j) != row.end())
            throw SchemaError("duplicate triplet (" + t.row + ", " + t.col + ")");
        row.push_back(j);
    }
    for (auto& row : data.reports.rows) std::sort(row.begin(), row.end());

    for (const auto& t : event_triplets) {
        auto i = report_index.at(t.row);
        auto e = intern(event_index, event_ids, t.col);
        if (e == data.events.size()) data.events.push_back({t.col, std::vector<std::uint8_t>(n, 0)});
        if (!t.present) continue;
        if (data.events[e].y[i]) throw SchemaError("duplicate triplet (" + t.row + ", " + t.col + ")");
        data.events[e].y[i] = 1;
    }
    return data;
}

Dataset load_triplets(const std::filesystem::path& drugs_path,
                      const std::filesystem::path& events_path) {
    return parse_triplets(read_file(drugs_path), read_file(events_path));
}

void write_reports(std::ostream& out, const Dataset& data) {
    const auto& x = data.reports;
    out << "#drugs: ";
    for (std::size_t j = 0; j < x.p(); ++j) out << (j ? "," : "") << x.drug_ids[j];
    out << "\n#events: ";
    for (std::size_t e = 0; e < data.events.size(); ++e)
        out << (e ? "," : "") << data.events[e].event_id;
    out << '\n';
    for (std::size_t i = 0; i < x.n(); ++i) {
        out << (x.report_ids.empty() ? "R" + std::to_string(i) : x.report_ids[i]) << ',';
        for (std::size_t k = 0; k < x.rows[i].size(); ++k)
            out << (k ? ";" : "") << x.drug_ids[x.rows[i][k]];
        out << ',';
        bool first = true;
        for (const auto& ev : data.events) {
            if (!ev.y[i]) continue;
            out << (first ? "" : ";") << ev.event_id;
            first = false;
        }
        out << '\n';
    }
}

std::vector<std::uint32_t> EligibilityMask::indices() const {
    std::vector<std::uint32_t> out;
    out.reserve(p_eligible);
    for (std::size_t j = 0; j < eligible.size(); ++j)
        if (eligible[j]) out.push_back(static_cast<std::uint32_t>(j));
    return out;
}

EligibilityMask eligibility_mask(const ReportMatrix& x, const EventVector& y) {
    if (y.y.size() != x.n()) throw std::invalid_argument("eligibility_mask: event length != n");

    // Per drug, count takers with and without the event. The four cells are
    // witnessed iff 0 < takers_pos < positives and 0 < takers_neg < negatives.
    std::vector<std::size_t> takers_pos(x.p(), 0), takers_neg(x.p(), 0);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < x.n(); ++i) {
        const bool event = y.y[i] != 0;
        positives += event;
        for (auto j : x.rows[i]) ++(event ? takers_pos : takers_neg)[j];
    }
    const std::size_t negatives = x.n() - positives;

    EligibilityMask mask;
    mask.eligible.assign(x.p(), false);
    for (std::size_t j = 0; j < x.p(); ++j) {
        const bool ok = takers_pos[j] > 0 && takers_pos[j] < positives && takers_neg[j] > 0 &&
                        takers_neg[j] < negatives;
        mask.eligible[j] = ok;
        mask.p_eligible += ok;
    }
    return mask;
}

EventData::EventData(const ReportMatrix& x, const EventVector& y, std::span<const std::uint32_t> drugs)
    : y_(y.y), drug_index_(drugs.begin(), drugs.end()) {
    if (y.y.size() != x.n()) throw std::invalid_argument("EventData: event length != n");
    std::vector<std::int64_t> slot(x.p(), -1);
    for (std::size_t k = 0; k < drug_index_.size(); ++k) {
        if (drug_index_[k] >= x.p()) throw std::out_of_range("EventData: drug index out of range");
        slot[drug_index_[k]] = static_cast<std::int64_t>(k);
    }
    columns_.resize(drug_index_.size());
    for (std::size_t i = 0; i < x.n(); ++i)
        for (auto j : x.rows[i])
            if (slot[j] >= 0) columns_[static_cast<std::size_t>(slot[j])].push_back(static_cast<std::uint32_t>(i));
    positives_ = static_cast<std::size_t>(std::count(y_.begin(), y_.end(), std::uint8_t{1}));
}

EventData::EventData(const ReportMatrix& x, const EventVector& y, const EligibilityMask& mask)
    : EventData(x, y, mask.indices()) {}

}  // namespace bicsignal
